#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcal/binning.hpp"
#include "groupcal/data_model.hpp"
#include "groupcal/error.hpp"
#include "groupcal/partition.hpp"

namespace groupcal {

struct RegionStats {
  std::size_t leaf = 0;
  std::size_t n = 0;
  double mean_label = 0.0;
};

struct GroupingLossBin {
  BinStats bin;
  std::vector<RegionStats> regions;  // after folding regions with fewer than 2 samples
  double dispersion = 0.0;           // raw between-region variance of the label mean
  double contribution = 0.0;         // dispersion after debiasing, clipped at 0
};

struct GroupingLossReport {
  double gl_lower = 0.0;
  std::vector<GroupingLossBin> per_bin;
  std::size_t n_leaves = 0;
  std::size_t n_bins = 0;
  bool debias = true;
  std::vector<std::string> warnings;
};

/// Warns when evaluation ids overlap the ids the partition was grown on.
inline std::optional<std::string> leakage_warning(std::span<const std::string> fit_ids,
                                                  std::span<const LabeledSample> eval) {
  if (fit_ids.empty()) return std::nullopt;
  const std::set<std::string> fit(fit_ids.begin(), fit_ids.end());
  std::size_t overlap = 0;
  for (const auto& s : eval) overlap += (!s.id.empty() && fit.contains(s.id)) ? 1 : 0;
  if (overlap == 0) return std::nullopt;
  return "LeakageWarning: " + std::to_string(overlap) + " evaluation ids were used to fit the partition";
}

/// Lower bound on the grouping loss from the dispersion of observed accuracy across
/// partition regions inside each score bin. The partition must come from data disjoint
/// from `eval`.
///
/// Per bin b with mean label y_b and regions j:
///   D_b  = sum_j (n_bj/n_b) (y_bj - y_b)^2
///   D'_b = D_b - sum_j (n_bj/n_b) [y_bj (1 - y_bj) / (n_bj - 1)] (1 - n_bj/n_b), clipped at 0
///   GL   = sum_b (n_b/n) D'_b
/// Regions with a single sample in a bin are folded into that bin's largest region.
inline GroupingLossReport grouping_loss_lower_bound(std::span<const LabeledSample> eval, const Partition& partition,
                                                    std::size_t n_bins, bool debias = true) {
  if (eval.empty()) throw Error(ErrorCode::EmptyInput, "no evaluation samples");
  if (!partition.fitted()) throw Error(ErrorCode::NotFitted, "partition is not fitted");

  const auto scores = scores_of(eval);
  const auto labels = labels_of(eval);
  const auto binning = Binning::quantile(scores, n_bins);
  const auto bins = bin_stats(scores, labels, binning);

  GroupingLossReport rep;
  rep.n_leaves = partition.n_leaves();
  rep.n_bins = n_bins;
  rep.debias = debias;
  if (auto w = leakage_warning(partition.train_ids(), eval)) rep.warnings.push_back(*w);

  const std::size_t L = partition.n_leaves();
  std::vector<std::size_t> bin_pos(binning.size(), 0);
  for (std::size_t p = 0; p < bins.size(); ++p) bin_pos[bins[p].bin_index] = p;
  std::vector<std::vector<std::size_t>> counts(bins.size(), std::vector<std::size_t>(L, 0));
  std::vector<std::vector<double>> sums(bins.size(), std::vector<double>(L, 0.0));
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto p = bin_pos[binning.assign(scores[i])];
    const auto leaf = partition.assign_leaf(eval[i]);
    ++counts[p][leaf];
    sums[p][leaf] += labels[i];
  }

  const double n_total = static_cast<double>(eval.size());
  for (std::size_t p = 0; p < bins.size(); ++p) {
    GroupingLossBin gb;
    gb.bin = bins[p];
    std::vector<std::size_t> present;
    for (std::size_t j = 0; j < L; ++j) {
      if (counts[p][j] > 0) present.push_back(j);
    }
    // Largest region by count; ties go to the lower mean label, then the lower leaf id.
    const auto host = *std::min_element(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
      if (counts[p][a] != counts[p][b]) return counts[p][a] > counts[p][b];
      const double ma = sums[p][a] / static_cast<double>(counts[p][a]);
      const double mb = sums[p][b] / static_cast<double>(counts[p][b]);
      if (ma != mb) return ma < mb;
      return a < b;
    });
    for (auto j : present) {
      if (j != host && counts[p][j] < 2) {
        counts[p][host] += counts[p][j];
        sums[p][host] += sums[p][j];
        counts[p][j] = 0;
      }
    }

    const double nb = static_cast<double>(gb.bin.n);
    const double yb = gb.bin.mean_label;
    double raw = 0.0;
    double noise = 0.0;
    for (auto j : present) {
      if (counts[p][j] == 0) continue;
      const double nj = static_cast<double>(counts[p][j]);
      const double yj = sums[p][j] / nj;
      gb.regions.push_back({j, counts[p][j], yj});
      raw += nj / nb * (yj - yb) * (yj - yb);
      if (counts[p][j] > 1) noise += nj / nb * (yj * (1.0 - yj) / (nj - 1.0)) * (1.0 - nj / nb);
    }
    gb.dispersion = raw;
    gb.contribution = debias ? std::max(0.0, raw - noise) : raw;
    rep.gl_lower += nb / n_total * gb.contribution;
    rep.per_bin.push_back(std::move(gb));
  }
  return rep;
}

struct BrierDecomposition {
  double brier = 0.0;
  double cl = 0.0;
  double gl_lower = 0.0;
  std::optional<double> irreducible;  // only with known true posteriors
};

/// The three reported metrics on `eval`, sharing one quantile binning.
inline BrierDecomposition brier_decomposition(std::span<const LabeledSample> eval, const Partition& partition,
                                              std::size_t n_bins, bool debias = true,
                                              CalibrationEstimator cl_estimator = CalibrationEstimator::Plain) {
  if (eval.empty()) throw Error(ErrorCode::EmptyInput, "no evaluation samples");
  const auto scores = scores_of(eval);
  const auto labels = labels_of(eval);
  BrierDecomposition d;
  d.brier = brier_score(scores, labels);
  d.cl = calibration_loss(scores, labels, Binning::quantile(scores, n_bins), cl_estimator);
  d.gl_lower = grouping_loss_lower_bound(eval, partition, n_bins, debias).gl_lower;
  if (std::all_of(eval.begin(), eval.end(), [](const LabeledSample& s) { return s.q_true.has_value(); })) {
    double il = 0.0;
    for (const auto& s : eval) il += *s.q_true * (1.0 - *s.q_true);
    d.irreducible = il / static_cast<double>(eval.size());
  }
  return d;
}

inline nlohmann::json to_json(const GroupingLossReport& r) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : r.per_bin) {
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& reg : b.regions) regions.push_back({{"leaf", reg.leaf}, {"n", reg.n}, {"mean_label", reg.mean_label}});
    auto jb = to_json(b.bin);
    jb["regions"] = std::move(regions);
    jb["dispersion"] = b.dispersion;
    jb["contribution"] = b.contribution;
    bins.push_back(std::move(jb));
  }
  return {{"gl_lower", r.gl_lower}, {"n_leaves", r.n_leaves}, {"n_bins", r.n_bins},
          {"debias", r.debias},     {"bins", std::move(bins)}, {"warnings", r.warnings}};
}

}  // namespace groupcal
