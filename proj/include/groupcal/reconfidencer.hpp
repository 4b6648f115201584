#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcal/audit.hpp"
#include "groupcal/binning.hpp"
#include "groupcal/data_model.hpp"
#include "groupcal/isotonic.hpp"
#include "groupcal/partition.hpp"

namespace groupcal {

struct ReconfidencerConfig {
  std::size_t max_leaves = 8;
  std::size_t min_leaf = 30;
  std::size_t min_leaf_fit = 20;
  bool append_score = false;
  // Grow the tree and fit the calibrators on train and calib together instead of
  // tree-on-train, calibrators-on-calib.
  bool pooled = false;
  std::uint64_t seed = 0;
};

/// Latent-group calibration: a partition of the embedding space with one isotonic
/// calibrator per leaf. Leaves without enough calibration data use the global fallback.
class Reconfidencer {
 public:
  static constexpr int kVersion = 1;

  Reconfidencer() = default;
  Reconfidencer(Partition partition, std::map<std::size_t, IsotonicCalibrator> per_leaf,
                IsotonicCalibrator fallback, std::size_t min_leaf_fit)
      : partition_(std::move(partition)),
        per_leaf_(std::move(per_leaf)),
        fallback_(std::move(fallback)),
        min_leaf_fit_(min_leaf_fit) {}

  [[nodiscard]] bool fitted() const noexcept { return partition_.fitted() && fallback_.fitted(); }
  [[nodiscard]] const Partition& partition() const noexcept { return partition_; }
  [[nodiscard]] const std::map<std::size_t, IsotonicCalibrator>& per_leaf() const noexcept { return per_leaf_; }
  [[nodiscard]] const IsotonicCalibrator& fallback() const noexcept { return fallback_; }
  [[nodiscard]] std::size_t min_leaf_fit() const noexcept { return min_leaf_fit_; }
  [[nodiscard]] bool uses_fallback(std::size_t leaf) const { return !per_leaf_.contains(leaf); }
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  [[nodiscard]] const IsotonicCalibrator& calibrator_for(std::size_t leaf) const {
    const auto it = per_leaf_.find(leaf);
    return it == per_leaf_.end() ? fallback_ : it->second;
  }

  /// Calibrated score: route the embedding to its leaf and apply that leaf's calibrator.
  [[nodiscard]] double reconfidence(double score, std::span<const double> embedding) const {
    if (!fitted()) throw Error(ErrorCode::NotFitted, "reconfidencer is not fitted");
    return calibrator_for(partition_.assign_leaf(embedding, score)).apply(score);
  }

  [[nodiscard]] nlohmann::json to_json() const {
    if (!fitted()) throw Error(ErrorCode::NotFitted, "reconfidencer is not fitted");
    nlohmann::json leaves = nlohmann::json::object();
    for (const auto& [leaf, cal] : per_leaf_) leaves[std::to_string(leaf)] = cal.to_json();
    return {{"type", "reconfidencer"},
            {"partition", partition_.to_json()},
            {"per_leaf", std::move(leaves)},
            {"fallback", fallback_.to_json()},
            {"min_leaf_fit", min_leaf_fit_},
            {"version", kVersion}};
  }

  static Reconfidencer from_json(const nlohmann::json& j) {
    try {
      if (j.value("version", 0) != kVersion) throw Error(ErrorCode::FormatError, "unsupported model version");
      auto partition = Partition::from_json(j.at("partition"));
      std::map<std::size_t, IsotonicCalibrator> per_leaf;
      for (const auto& [key, value] : j.at("per_leaf").items()) {
        const auto leaf = static_cast<std::size_t>(std::stoull(key));
        if (leaf >= partition.n_leaves()) throw Error(ErrorCode::FormatError, "calibrator for unknown leaf " + key);
        per_leaf.emplace(leaf, IsotonicCalibrator::from_json(value));
      }
      return {std::move(partition), std::move(per_leaf), IsotonicCalibrator::from_json(j.at("fallback")),
              j.at("min_leaf_fit").get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("reconfidencer: ") + e.what());
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::FormatError, "reconfidencer: per_leaf keys must be leaf ids");
    }
  }

 private:
  friend Reconfidencer fit_reconfidencer(std::span<const LabeledSample>, std::span<const LabeledSample>,
                                         const ReconfidencerConfig&);

  Partition partition_;
  std::map<std::size_t, IsotonicCalibrator> per_leaf_;
  IsotonicCalibrator fallback_;
  std::size_t min_leaf_fit_ = 20;
  std::vector<std::string> warnings_;
};

/// Global isotonic calibration of scores against labels.
inline IsotonicCalibrator fit_global_calibrator(std::span<const LabeledSample> samples) {
  return fit_isotonic(scores_of(samples), labels_of(samples));
}

inline Reconfidencer fit_reconfidencer(std::span<const LabeledSample> train, std::span<const LabeledSample> calib,
                                       const ReconfidencerConfig& cfg) {
  if (train.empty() || calib.empty()) throw Error(ErrorCode::TooFewSamples, "train and calib must be nonempty");

  std::vector<std::string> warnings;
  {
    std::set<std::string> train_ids;
    for (const auto& s : train) {
      if (!s.id.empty()) train_ids.insert(s.id);
    }
    std::size_t overlap = 0;
    for (const auto& s : calib) overlap += train_ids.contains(s.id) ? 1 : 0;
    if (overlap > 0) {
      warnings.push_back("LeakageWarning: " + std::to_string(overlap) + " calib ids also appear in train");
    }
  }

  std::vector<LabeledSample> pooled;
  std::span<const LabeledSample> tree_data = train;
  std::span<const LabeledSample> calib_data = calib;
  if (cfg.pooled) {
    pooled.assign(train.begin(), train.end());
    pooled.insert(pooled.end(), calib.begin(), calib.end());
    tree_data = pooled;
    calib_data = pooled;
  }

  PartitionConfig pc;
  pc.max_leaves = cfg.max_leaves;
  pc.min_leaf = cfg.min_leaf;
  pc.append_score = cfg.append_score;
  pc.seed = cfg.seed;
  auto partition = fit_partition(tree_data, pc);

  std::vector<std::vector<double>> leaf_scores(partition.n_leaves()), leaf_labels(partition.n_leaves());
  for (const auto& s : calib_data) {
    const auto leaf = partition.assign_leaf(s);
    leaf_scores[leaf].push_back(s.score);
    leaf_labels[leaf].push_back(static_cast<double>(s.label));
  }
  std::map<std::size_t, IsotonicCalibrator> per_leaf;
  for (std::size_t leaf = 0; leaf < partition.n_leaves(); ++leaf) {
    if (leaf_scores[leaf].size() < cfg.min_leaf_fit || leaf_scores[leaf].empty()) continue;
    per_leaf.emplace(leaf, fit_isotonic(leaf_scores[leaf], leaf_labels[leaf]));
  }
  Reconfidencer model(std::move(partition), std::move(per_leaf), fit_global_calibrator(calib_data),
                      cfg.min_leaf_fit);
  model.warnings_ = std::move(warnings);
  return model;
}

/// Copy of `samples` with scores replaced by a calibration map.
template <class Map>
std::vector<LabeledSample> rescored(std::span<const LabeledSample> samples, Map&& map) {
  std::vector<LabeledSample> out(samples.begin(), samples.end());
  for (auto& s : out) s.score = map(s);
  return out;
}

inline std::vector<LabeledSample> apply_calibrator(const IsotonicCalibrator& cal, std::span<const LabeledSample> samples) {
  return rescored(samples, [&](const LabeledSample& s) { return cal.apply(s.score); });
}

inline std::vector<LabeledSample> apply_reconfidencer(const Reconfidencer& model,
                                                      std::span<const LabeledSample> samples) {
  return rescored(samples, [&](const LabeledSample& s) { return model.reconfidence(s.score, s.embedding); });
}

struct SweepRow {
  std::string method;  // "uncalibrated", "calibration" or "reconfidence"
  std::size_t p = 0;   // leaf budget; 0 for the non-partitioned rows
  double brier = 0.0;
  double cl = 0.0;
  std::optional<double> gl_lower;
};

/// Samples the calibrators are fitted on: calib alone, or train and calib in pooled mode.
inline std::vector<LabeledSample> calibration_set(std::span<const LabeledSample> train,
                                                  std::span<const LabeledSample> calib, bool pooled) {
  std::vector<LabeledSample> out;
  if (pooled) out.assign(train.begin(), train.end());
  out.insert(out.end(), calib.begin(), calib.end());
  return out;
}

/// Test-set metrics for the raw scores, global calibration (fitted on the same data as
/// the per-leaf calibrators) and reconfidencing at each leaf budget. GL uses the audit protocol on the
/// corrected test scores, so it never reuses the model's own partition.
inline std::vector<SweepRow> sweep_partitions(std::span<const LabeledSample> train,
                                              std::span<const LabeledSample> calib,
                                              std::span<const LabeledSample> test,
                                              std::span<const std::size_t> leaf_counts,
                                              const ReconfidencerConfig& base, const AuditConfig& audit) {
  std::vector<SweepRow> rows;
  const auto row_for = [&](std::string method, std::size_t p, std::span<const LabeledSample> scored) {
    const auto a = audit_metrics(scored, audit);
    return SweepRow{std::move(method), p, a.brier, a.cl, a.gl_lower};
  };
  rows.push_back(row_for("uncalibrated", 0, test));

  const auto global = fit_global_calibrator(calibration_set(train, calib, base.pooled));
  rows.push_back(row_for("calibration", 0, apply_calibrator(global, test)));

  for (const auto p : leaf_counts) {
    auto cfg = base;
    cfg.max_leaves = p;
    const auto model = fit_reconfidencer(train, calib, cfg);
    rows.push_back(row_for("reconfidence", p, apply_reconfidencer(model, test)));
  }
  return rows;
}

}  // namespace groupcal
