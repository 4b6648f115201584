#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "groupcal/error.hpp"

namespace groupcal {

struct Knot {
  double threshold = 0.0;
  double value = 0.0;
};

/// Nondecreasing step-function calibrator fitted by pool-adjacent-violators.
/// A score maps to the value of the last knot at or below it; scores below the
/// first knot take the first value.
class IsotonicCalibrator {
 public:
  IsotonicCalibrator() = default;
  IsotonicCalibrator(std::vector<Knot> knots, std::size_t fit_n) : knots_(std::move(knots)), fit_n_(fit_n) {
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      const auto& kn = knots_[k];
      if (!std::isfinite(kn.threshold) || !std::isfinite(kn.value) || kn.value < 0.0 || kn.value > 1.0) {
        throw Error(ErrorCode::FormatError, "isotonic knot outside [0,1]");
      }
      if (k > 0 && (kn.threshold <= knots_[k - 1].threshold || kn.value < knots_[k - 1].value)) {
        throw Error(ErrorCode::FormatError, "isotonic knots must be increasing");
      }
    }
  }

  [[nodiscard]] bool fitted() const noexcept { return !knots_.empty(); }
  [[nodiscard]] std::span<const Knot> knots() const noexcept { return knots_; }
  [[nodiscard]] std::size_t fit_n() const noexcept { return fit_n_; }

  [[nodiscard]] double apply(double score) const {
    if (knots_.empty()) throw Error(ErrorCode::NotFitted, "isotonic calibrator is not fitted");
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), score,
                                     [](double s, const Knot& k) { return s < k.threshold; });
    return it == knots_.begin() ? knots_.front().value : std::prev(it)->value;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& k : knots_) knots.push_back({k.threshold, k.value});
    return {{"type", "isotonic"}, {"knots", std::move(knots)}, {"fit_n", fit_n_}};
  }

  static IsotonicCalibrator from_json(const nlohmann::json& j) {
    try {
      if (j.at("type").get<std::string>() != "isotonic") throw Error(ErrorCode::FormatError, "not an isotonic model");
      std::vector<Knot> knots;
      for (const auto& k : j.at("knots")) knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
      if (knots.empty()) throw Error(ErrorCode::FormatError, "isotonic model without knots");
      return {std::move(knots), j.at("fit_n").get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("isotonic model: ") + e.what());
    }
  }

  friend bool operator==(const IsotonicCalibrator& a, const IsotonicCalibrator& b) {
    return a.fit_n_ == b.fit_n_ && a.knots_.size() == b.knots_.size() &&
           std::equal(a.knots_.begin(), a.knots_.end(), b.knots_.begin(), [](const Knot& x, const Knot& y) {
             return x.threshold == y.threshold && x.value == y.value;
           });
  }

 private:
  std::vector<Knot> knots_;
  std::size_t fit_n_ = 0;
};

/// Least-squares nondecreasing fit of labels on scores. Labels may be binary or
/// averaged values in [0, 1]; equal scores are pooled first so input order does not matter.
inline IsotonicCalibrator fit_isotonic(std::span<const double> scores, std::span<const double> labels) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "isotonic fit needs at least one pair");
  if (scores.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]) || !std::isfinite(labels[i])) {
      throw Error(ErrorCode::NonFiniteValue, "isotonic input must be finite");
    }
    if (labels[i] < 0.0 || labels[i] > 1.0) throw Error(ErrorCode::NonFiniteValue, "isotonic labels must be in [0,1]");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  struct Block {
    double start;   // smallest score in the block
    double weight;  // number of samples
    double sum;     // sum of labels
    [[nodiscard]] double mean() const { return sum / weight; }
  };
  std::vector<Block> blocks;
  blocks.reserve(order.size());
  for (std::size_t k = 0; k < order.size();) {
    // pool tied scores
    Block b{scores[order[k]], 0.0, 0.0};
    for (; k < order.size() && scores[order[k]] == b.start; ++k) {
      b.weight += 1.0;
      b.sum += labels[order[k]];
    }
    blocks.push_back(b);
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().weight += top.weight;
      blocks.back().sum += top.sum;
    }
  }

  std::vector<Knot> knots;
  knots.reserve(blocks.size());
  for (const auto& b : blocks) knots.push_back({b.start, std::clamp(b.mean(), 0.0, 1.0)});
  return {std::move(knots), scores.size()};
}

}  // namespace groupcal
