#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groupcal/binning.hpp"
#include "groupcal/data_model.hpp"
#include "groupcal/grouping_loss.hpp"
#include "groupcal/partition.hpp"
#include "groupcal/random.hpp"

namespace groupcal {

struct AuditConfig {
  std::size_t n_bins = 15;
  std::size_t max_leaves = 8;
  std::size_t min_leaf = 30;
  bool append_score = false;
  bool debias = true;
  CalibrationEstimator cl_estimator = CalibrationEstimator::Plain;
  double gl_fit_fraction = 0.5;  // share of samples used to grow the fresh partition
  std::uint64_t seed = 0;
};

struct AuditResult {
  double brier = 0.0;
  double cl = 0.0;
  std::optional<double> gl_lower;
  std::optional<GroupingLossReport> gl_report;
  std::optional<Partition> partition;
  std::size_t gl_fit_n = 0;
  std::size_t gl_eval_n = 0;
  CalibrationCurve curve;
  std::vector<std::string> warnings;
};

/// Brier and calibration loss on all samples; the grouping-loss lower bound comes from a
/// fresh partition grown on the residuals of one share of the samples and evaluated on
/// the rest. GL is omitted (with a warning) when samples carry no embeddings or there
/// are too few of them.
inline AuditResult audit_metrics(std::span<const LabeledSample> samples, const AuditConfig& cfg) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples to audit");
  const auto scores = scores_of(samples);
  const auto labels = labels_of(samples);
  AuditResult r;
  r.brier = brier_score(scores, labels);
  const auto binning = Binning::quantile(scores, std::min(cfg.n_bins, samples.size()));
  r.cl = calibration_loss(scores, labels, binning, cfg.cl_estimator);
  r.curve = {bin_stats(scores, labels, binning), BinningKind::Quantile, cfg.n_bins};

  if (samples.front().embedding.empty()) {
    r.warnings.emplace_back("no embeddings: grouping loss omitted");
    return r;
  }
  if (samples.size() < 3) {
    r.warnings.emplace_back("too few samples for a grouping-loss split: grouping loss omitted");
    return r;
  }
  const double f = cfg.gl_fit_fraction;
  const auto split = split_dataset(samples.size(), {f, 0.0, 1.0 - f}, derive_seed(cfg.seed, streams::kAuditSplit));
  const auto fit = select(samples, std::span<const std::size_t>(split.train));
  const auto eval = select(samples, std::span<const std::size_t>(split.test));
  r.gl_fit_n = fit.size();
  r.gl_eval_n = eval.size();
  if (fit.size() < 2 * cfg.min_leaf || eval.size() < cfg.n_bins) {
    r.warnings.emplace_back("too few samples for min_leaf/bins: grouping loss omitted");
    return r;
  }
  PartitionConfig pc;
  pc.max_leaves = cfg.max_leaves;
  pc.min_leaf = cfg.min_leaf;
  pc.append_score = cfg.append_score;
  pc.seed = derive_seed(cfg.seed, streams::kPartition);
  r.partition = fit_partition(fit, pc);
  r.gl_report = grouping_loss_lower_bound(eval, *r.partition, cfg.n_bins, cfg.debias);
  r.gl_lower = r.gl_report->gl_lower;
  for (const auto& w : r.gl_report->warnings) r.warnings.push_back(w);
  return r;
}

}  // namespace groupcal
