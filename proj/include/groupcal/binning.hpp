#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "groupcal/data_model.hpp"
#include "groupcal/error.hpp"

namespace groupcal {

enum class BinningKind { Quantile, Width };

inline std::string_view to_string(BinningKind k) { return k == BinningKind::Quantile ? "quantile" : "width"; }

/// Score bins given by their lower edges. Bin b covers [lower(b), lower(b+1));
/// the last bin is closed at `upper_edge`. Scores outside the range are clamped to the end bins.
class Binning {
 public:
  Binning(BinningKind kind, std::size_t requested, std::vector<double> lowers, double upper_edge)
      : kind_(kind), requested_(requested), lowers_(std::move(lowers)), upper_(upper_edge) {}

  /// Edges at the empirical k/n_bins quantiles. Equal edges (mass points) are merged,
  /// so fewer than n_bins bins may come back; every bin is nonempty on `scores`.
  static Binning quantile(std::span<const double> scores, std::size_t n_bins) {
    if (n_bins == 0) throw Error(ErrorCode::BadConfig, "n_bins must be >= 1");
    if (scores.size() < n_bins) {
      throw Error(ErrorCode::TooFewSamples, std::to_string(scores.size()) + " samples for " +
                                                std::to_string(n_bins) + " bins");
    }
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> lowers{sorted.front()};
    for (std::size_t k = 1; k < n_bins; ++k) {
      const double edge = sorted[k * n / n_bins];
      if (edge > lowers.back()) lowers.push_back(edge);
    }
    return {BinningKind::Quantile, n_bins, std::move(lowers), sorted.back()};
  }

  /// Equal-width bins over [0, 1].
  static Binning width(std::size_t n_bins) {
    if (n_bins == 0) throw Error(ErrorCode::BadConfig, "n_bins must be >= 1");
    std::vector<double> lowers(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) lowers[k] = static_cast<double>(k) / static_cast<double>(n_bins);
    return {BinningKind::Width, n_bins, std::move(lowers), 1.0};
  }

  [[nodiscard]] std::size_t assign(double score) const {
    const auto it = std::upper_bound(lowers_.begin(), lowers_.end(), score);
    if (it == lowers_.begin()) return 0;
    return static_cast<std::size_t>(it - lowers_.begin()) - 1;
  }

  [[nodiscard]] std::size_t size() const noexcept { return lowers_.size(); }
  [[nodiscard]] std::size_t requested() const noexcept { return requested_; }
  [[nodiscard]] BinningKind kind() const noexcept { return kind_; }
  [[nodiscard]] double lower(std::size_t b) const { return lowers_.at(b); }
  [[nodiscard]] double upper(std::size_t b) const { return b + 1 < lowers_.size() ? lowers_[b + 1] : upper_; }

 private:
  BinningKind kind_;
  std::size_t requested_;
  std::vector<double> lowers_;
  double upper_;
};

struct BinStats {
  std::size_t bin_index = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
  double mean_score = 0.0;
  double mean_label = 0.0;  // observed accuracy C
};

struct CalibrationCurve {
  std::vector<BinStats> bins;
  BinningKind binning = BinningKind::Quantile;
  std::size_t n_bins = 0;
};

inline std::vector<double> scores_of(std::span<const LabeledSample> samples) {
  std::vector<double> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(), [](const LabeledSample& s) { return s.score; });
  return out;
}

inline std::vector<double> labels_of(std::span<const LabeledSample> samples) {
  std::vector<double> out(samples.size());
  std::transform(samples.begin(), samples.end(), out.begin(),
                 [](const LabeledSample& s) { return static_cast<double>(s.label); });
  return out;
}

namespace detail {

inline void check_pair(std::span<const double> scores, std::span<const double> labels) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
  if (scores.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
}

}  // namespace detail

/// Per-bin statistics over the nonempty bins, in bin order.
inline std::vector<BinStats> bin_stats(std::span<const double> scores, std::span<const double> labels,
                                       const Binning& binning) {
  detail::check_pair(scores, labels);
  std::vector<BinStats> acc(binning.size());
  std::vector<double> score_sum(binning.size(), 0.0), label_sum(binning.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto b = binning.assign(scores[i]);
    ++acc[b].n;
    score_sum[b] += scores[i];
    label_sum[b] += labels[i];
  }
  std::vector<BinStats> out;
  for (std::size_t b = 0; b < acc.size(); ++b) {
    if (acc[b].n == 0) continue;
    auto s = acc[b];
    s.bin_index = b;
    s.lower = binning.lower(b);
    s.upper = binning.upper(b);
    s.mean_score = score_sum[b] / static_cast<double>(s.n);
    s.mean_label = label_sum[b] / static_cast<double>(s.n);
    out.push_back(s);
  }
  return out;
}

/// Mean squared error between scores and binary labels.
inline double brier_score(std::span<const double> scores, std::span<const double> labels) {
  detail::check_pair(scores, labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += (scores[i] - labels[i]) * (scores[i] - labels[i]);
  return sum / static_cast<double>(scores.size());
}

enum class CalibrationEstimator { Plain, Debiased };

inline std::string_view to_string(CalibrationEstimator e) {
  return e == CalibrationEstimator::Plain ? "plain" : "debiased";
}

/// Binned calibration loss: sum over bins of (n_b/n) (mean_score_b - mean_label_b)^2.
/// The debiased estimator removes the sampling variance mean_label(1-mean_label)/(n_b-1)
/// from each bin term and clips it at zero.
inline double calibration_loss(std::span<const double> scores, std::span<const double> labels,
                               const Binning& binning,
                               CalibrationEstimator estimator = CalibrationEstimator::Plain) {
  const auto bins = bin_stats(scores, labels, binning);
  const double n = static_cast<double>(scores.size());
  double cl = 0.0;
  for (const auto& b : bins) {
    double term = (b.mean_score - b.mean_label) * (b.mean_score - b.mean_label);
    if (estimator == CalibrationEstimator::Debiased && b.n > 1) {
      term = std::max(0.0, term - b.mean_label * (1.0 - b.mean_label) / static_cast<double>(b.n - 1));
    }
    cl += static_cast<double>(b.n) / n * term;
  }
  return cl;
}

inline CalibrationCurve calibration_curve(std::span<const double> scores, std::span<const double> labels,
                                          std::size_t n_bins, BinningKind kind = BinningKind::Quantile) {
  detail::check_pair(scores, labels);
  const auto binning = kind == BinningKind::Quantile ? Binning::quantile(scores, n_bins) : Binning::width(n_bins);
  return {bin_stats(scores, labels, binning), kind, n_bins};
}

/// Dense group index per sample; nullopt marks samples that lack the grouping feature.
struct GroupAssignment {
  std::vector<std::optional<std::size_t>> group_of;
  std::vector<std::string> names;
  std::size_t n_skipped = 0;
};

/// Groups by the distinct values of a feature (strings, or integers rendered as text).
inline GroupAssignment feature_groups(std::span<const LabeledSample> samples, const std::string& feature) {
  GroupAssignment out;
  out.group_of.resize(samples.size());
  std::vector<std::string> values;
  for (const auto& s : samples) {
    const auto it = s.features.find(feature);
    if (it == s.features.end()) continue;
    values.push_back(std::visit(
        [](const auto& v) -> std::string {
          if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>) {
            return v;
          } else {
            return std::to_string(v);
          }
        },
        it->second));
  }
  if (values.empty()) throw Error(ErrorCode::UnknownFeature, "no sample has feature '" + feature + "'");
  out.names = values;
  std::sort(out.names.begin(), out.names.end());
  out.names.erase(std::unique(out.names.begin(), out.names.end()), out.names.end());

  std::size_t next = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].features.contains(feature)) {
      ++out.n_skipped;
      continue;
    }
    const auto& v = values[next++];
    out.group_of[i] = static_cast<std::size_t>(std::lower_bound(out.names.begin(), out.names.end(), v) -
                                               out.names.begin());
  }
  return out;
}

/// Equal-count strata over the rank of an integer feature (e.g. backlink popularity).
/// Rank ties break by id so the strata are reproducible.
inline GroupAssignment strata_groups(std::span<const LabeledSample> samples, const std::string& feature,
                                     std::size_t n_strata) {
  if (n_strata == 0) throw Error(ErrorCode::BadConfig, "n_strata must be >= 1");
  GroupAssignment out;
  out.group_of.resize(samples.size());
  std::vector<std::pair<std::int64_t, std::size_t>> ranked;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto it = samples[i].features.find(feature);
    if (it == samples[i].features.end()) {
      ++out.n_skipped;
      continue;
    }
    const auto* v = std::get_if<std::int64_t>(&it->second);
    if (v == nullptr) throw Error(ErrorCode::UnknownFeature, "feature '" + feature + "' is not numeric");
    ranked.emplace_back(*v, i);
  }
  if (ranked.empty()) throw Error(ErrorCode::UnknownFeature, "no sample has feature '" + feature + "'");
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return samples[a.second].id < samples[b.second].id;
  });
  const std::size_t k = std::min(n_strata, ranked.size());
  for (std::size_t r = 0; r < ranked.size(); ++r) out.group_of[ranked[r].second] = r * k / ranked.size();
  for (std::size_t g = 0; g < k; ++g) out.names.push_back(feature + "_" + std::to_string(g));
  return out;
}

struct GroupPoint {
  std::size_t group = 0;
  std::size_t n = 0;
  double mean_label = 0.0;
  bool suppressed = false;  // below the plotting floor; still reported in raw output
};

struct GroupingDiagram {
  CalibrationCurve curve;
  std::vector<std::vector<GroupPoint>> groups;  // parallel to curve.bins
  std::vector<std::string> group_names;
  std::size_t n_skipped = 0;
  std::size_t min_group_n = 5;
};

/// Calibration curve with per-group observed accuracy inside each bin.
inline GroupingDiagram grouping_diagram(std::span<const double> scores, std::span<const double> labels,
                                        const GroupAssignment& groups, std::size_t n_bins,
                                        std::size_t min_group_n = 5) {
  detail::check_pair(scores, labels);
  if (groups.group_of.size() != scores.size()) {
    throw Error(ErrorCode::DimensionMismatch, "group assignment length differs from samples");
  }
  const auto binning = Binning::quantile(scores, n_bins);
  GroupingDiagram d;
  d.curve = {bin_stats(scores, labels, binning), BinningKind::Quantile, n_bins};
  d.group_names = groups.names;
  d.n_skipped = groups.n_skipped;
  d.min_group_n = min_group_n;

  const std::size_t g_count = groups.names.size();
  std::vector<std::size_t> bin_pos(binning.size(), 0);
  for (std::size_t p = 0; p < d.curve.bins.size(); ++p) bin_pos[d.curve.bins[p].bin_index] = p;
  std::vector<std::vector<std::size_t>> counts(d.curve.bins.size(), std::vector<std::size_t>(g_count, 0));
  std::vector<std::vector<double>> sums(d.curve.bins.size(), std::vector<double>(g_count, 0.0));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!groups.group_of[i]) continue;
    const auto p = bin_pos[binning.assign(scores[i])];
    ++counts[p][*groups.group_of[i]];
    sums[p][*groups.group_of[i]] += labels[i];
  }
  d.groups.resize(d.curve.bins.size());
  for (std::size_t p = 0; p < d.curve.bins.size(); ++p) {
    for (std::size_t g = 0; g < g_count; ++g) {
      if (counts[p][g] == 0) continue;
      d.groups[p].push_back({g, counts[p][g], sums[p][g] / static_cast<double>(counts[p][g]),
                             counts[p][g] < min_group_n});
    }
  }
  return d;
}

/// Shortest round-trip decimal form, shared by the CSV and JSON writers.
inline std::string format_number(double x) { return nlohmann::json(x).dump(); }

inline void write_curve_csv(std::ostream& out, const CalibrationCurve& curve) {
  out << "bin_index,lower,upper,n,mean_score,mean_label\n";
  for (const auto& b : curve.bins) {
    out << b.bin_index << ',' << format_number(b.lower) << ',' << format_number(b.upper) << ',' << b.n << ','
        << format_number(b.mean_score) << ',' << format_number(b.mean_label) << '\n';
  }
}

/// Plot data: suppressed groups are left out of the CSV but kept in the JSON mirror.
inline void write_diagram_csv(std::ostream& out, const GroupingDiagram& d) {
  out << "bin_index,lower,upper,n,mean_score,mean_label,group_id,group_n,group_mean_label\n";
  for (std::size_t p = 0; p < d.curve.bins.size(); ++p) {
    const auto& b = d.curve.bins[p];
    for (const auto& g : d.groups[p]) {
      if (g.suppressed) continue;
      out << b.bin_index << ',' << format_number(b.lower) << ',' << format_number(b.upper) << ',' << b.n << ','
          << format_number(b.mean_score) << ',' << format_number(b.mean_label) << ',' << d.group_names[g.group]
          << ',' << g.n << ',' << format_number(g.mean_label) << '\n';
    }
  }
}

inline nlohmann::json to_json(const BinStats& b) {
  return {{"bin_index", b.bin_index}, {"lower", b.lower},         {"upper", b.upper},
          {"n", b.n},                 {"mean_score", b.mean_score}, {"mean_label", b.mean_label}};
}

inline nlohmann::json to_json(const CalibrationCurve& c) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : c.bins) bins.push_back(to_json(b));
  return {{"binning", to_string(c.binning)}, {"n_bins", c.n_bins}, {"bins", std::move(bins)}};
}

inline nlohmann::json to_json(const GroupingDiagram& d) {
  auto j = to_json(d.curve);
  for (std::size_t p = 0; p < d.curve.bins.size(); ++p) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : d.groups[p]) {
      groups.push_back({{"group_id", d.group_names[g.group]},
                        {"n", g.n},
                        {"mean_label", g.mean_label},
                        {"suppressed", g.suppressed}});
    }
    j["bins"][p]["groups"] = std::move(groups);
  }
  j["n_skipped"] = d.n_skipped;
  j["min_group_n"] = d.min_group_n;
  return j;
}

}  // namespace groupcal
