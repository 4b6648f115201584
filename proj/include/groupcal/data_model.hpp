#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "groupcal/error.hpp"
#include "groupcal/random.hpp"

namespace groupcal {

using FeatureValue = std::variant<std::string, std::int64_t>;
using Features = std::map<std::string, FeatureValue>;
using Embedding = std::vector<double>;

/// One query: confidence score S, correctness label Y and the query embedding.
/// `q_true` (the true posterior Q) is only known for synthetic data.
struct LabeledSample {
  std::string id;
  double score = 0.0;
  int label = 0;
  Embedding embedding;
  Features features;
  std::optional<std::string> relation;
  std::optional<double> q_true;
};

struct ValidationReport {
  std::size_t n_records = 0;
  std::size_t embedding_dim = 0;
  std::size_t n_clamped = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_missing_features = 0;
  std::vector<std::string> violations;
};

struct ValidatedDataset {
  std::vector<LabeledSample> records;
  ValidationReport report;
};

/// Checks a dataset and clamps scores into [0, 1].
/// Throws on hard faults (mixed embedding dims, non-binary labels, non-finite values).
inline ValidatedDataset validate_dataset(std::span<const LabeledSample> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no records");

  ValidatedDataset out;
  out.records.assign(records.begin(), records.end());
  auto& rep = out.report;
  rep.n_records = records.size();
  rep.embedding_dim = records.front().embedding.size();

  for (auto& r : out.records) {
    if (r.embedding.size() != rep.embedding_dim) {
      throw Error(ErrorCode::DimensionMismatch, "record '" + r.id + "' has embedding dim " +
                                                    std::to_string(r.embedding.size()) + ", expected " +
                                                    std::to_string(rep.embedding_dim));
    }
    if (!std::isfinite(r.score)) throw Error(ErrorCode::NonFiniteValue, "record '" + r.id + "' score");
    for (double v : r.embedding) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "record '" + r.id + "' embedding");
    }
    if (r.label != 0 && r.label != 1) {
      throw Error(ErrorCode::NonBinaryLabel, "record '" + r.id + "' label " + std::to_string(r.label));
    }
    if (r.q_true && (!std::isfinite(*r.q_true) || *r.q_true < 0.0 || *r.q_true > 1.0)) {
      throw Error(ErrorCode::NonFiniteValue, "record '" + r.id + "' q_true outside [0,1]");
    }
    if (r.score < 0.0 || r.score > 1.0) {
      const double clamped = std::clamp(r.score, 0.0, 1.0);
      rep.violations.push_back("record '" + r.id + "': score " + std::to_string(r.score) + " clamped to " +
                               std::to_string(clamped));
      r.score = clamped;
      ++rep.n_clamped;
    }
    if (r.features.empty()) ++rep.n_missing_features;
    (r.label == 1 ? rep.n_positive : rep.n_negative) += 1;
  }
  return out;
}

struct SplitRatios {
  double train = 0.25;
  double validation = 0.25;
  double test = 0.50;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

namespace detail {

inline void check_ratios(const SplitRatios& r) {
  const std::array<double, 3> parts{r.train, r.validation, r.test};
  for (double p : parts) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorCode::BadRatios, "ratios must be nonnegative");
  }
  if (std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadRatios, "ratios must sum to 1");
  }
}

inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
  const auto rounded = [n](double ratio) { return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))); };
  const std::size_t train = std::min(rounded(r.train), n);
  const std::size_t validation = std::min(rounded(r.validation), n - train);
  return {train, validation, n - train - validation};
}

}  // namespace detail

/// Random train/validation/test split. Rounded train and validation sizes are kept
/// exactly; the rounding remainder goes to test.
inline DatasetSplit split_dataset(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
  detail::check_ratios(ratios);
  if (n < 3) throw Error(ErrorCode::TooFewSamples, "split needs at least 3 records");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto rng = make_rng(seed, streams::kSplit);
  // Fisher-Yates with our own uniform draw so the permutation does not depend on
  // the standard library's distribution implementation.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }

  const auto sizes = detail::split_sizes(n, ratios);
  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
  split.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes[0]),
                          perm.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]));
  split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]), perm.end());
  return split;
}

/// Splits each stratum (e.g. each relation) separately and concatenates the parts.
inline DatasetSplit split_dataset_stratified(std::span<const std::string> strata, const SplitRatios& ratios,
                                             std::uint64_t seed) {
  detail::check_ratios(ratios);
  if (strata.size() < 3) throw Error(ErrorCode::TooFewSamples, "split needs at least 3 records");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);

  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  std::uint64_t stream = 0;
  for (const auto& [key, members] : groups) {
    const std::uint64_t group_seed = derive_seed(seed, ++stream);
    if (members.size() < 3) {
      // too small to split; keep it out of fitting
      split.test.insert(split.test.end(), members.begin(), members.end());
      continue;
    }
    const auto local = split_dataset(members.size(), ratios, group_seed);
    for (auto i : local.train) split.train.push_back(members[i]);
    for (auto i : local.validation) split.validation.push_back(members[i]);
    for (auto i : local.test) split.test.push_back(members[i]);
  }
  return split;
}

template <class T>
std::vector<T> select(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

}  // namespace groupcal
