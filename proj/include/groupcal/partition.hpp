#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcal/binning.hpp"
#include "groupcal/data_model.hpp"
#include "groupcal/error.hpp"

namespace groupcal {

struct PartitionConfig {
  std::size_t max_leaves = 8;
  std::size_t min_leaf = 30;
  std::size_t max_candidates = 256;  // threshold candidates per feature
  bool append_score = false;         // use the confidence score as an extra tree feature
  std::uint64_t seed = 0;
};

/// A fitted regression tree over query embeddings. Its leaves are the latent sub-groups.
class Partition {
 public:
  struct Node {
    // internal node
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    // leaf
    bool is_leaf = true;
    std::size_t leaf_id = 0;
    std::size_t n = 0;
    double mean_label = 0.0;
    double mean_score = 0.0;
  };

  Partition() = default;

  [[nodiscard]] bool fitted() const noexcept { return !nodes_.empty(); }
  [[nodiscard]] std::size_t n_leaves() const noexcept { return n_leaves_; }
  [[nodiscard]] std::size_t embedding_dim() const noexcept { return embedding_dim_; }
  [[nodiscard]] const PartitionConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::span<const Node> nodes() const noexcept { return nodes_; }

  /// Ids of the samples the tree was grown on (kept in memory only, for leakage checks).
  [[nodiscard]] const std::vector<std::string>& train_ids() const noexcept { return train_ids_; }

  /// Routes an embedding to its leaf: left when value < threshold, right otherwise.
  [[nodiscard]] std::size_t assign_leaf(std::span<const double> embedding, double score = 0.0) const {
    if (nodes_.empty()) throw Error(ErrorCode::NotFitted, "partition is not fitted");
    if (embedding.size() != embedding_dim_) {
      throw Error(ErrorCode::DimensionMismatch, "embedding dim " + std::to_string(embedding.size()) +
                                                    ", partition expects " + std::to_string(embedding_dim_));
    }
    std::size_t k = 0;
    while (!nodes_[k].is_leaf) {
      const auto& nd = nodes_[k];
      const double v = nd.feature < embedding_dim_ ? embedding[nd.feature] : score;
      k = v < nd.threshold ? nd.left : nd.right;
    }
    return nodes_[k].leaf_id;
  }

  [[nodiscard]] std::size_t assign_leaf(const LabeledSample& s) const { return assign_leaf(s.embedding, s.score); }

  [[nodiscard]] nlohmann::json to_json() const {
    if (nodes_.empty()) throw Error(ErrorCode::NotFitted, "partition is not fitted");
    return {{"embedding_dim", embedding_dim_},
            {"n_leaves", n_leaves_},
            {"max_leaves", config_.max_leaves},
            {"min_leaf", config_.min_leaf},
            {"append_score", config_.append_score},
            {"fit_seed", config_.seed},
            {"root", node_to_json(0)}};
  }

  static Partition from_json(const nlohmann::json& j) {
    Partition p;
    try {
      p.embedding_dim_ = j.at("embedding_dim").get<std::size_t>();
      p.config_.max_leaves = j.at("max_leaves").get<std::size_t>();
      p.config_.min_leaf = j.value("min_leaf", std::size_t{30});
      p.config_.append_score = j.value("append_score", false);
      p.config_.seed = j.value("fit_seed", std::uint64_t{0});
      p.read_node(j.at("root"));
      p.n_leaves_ = static_cast<std::size_t>(
          std::count_if(p.nodes_.begin(), p.nodes_.end(), [](const Node& n) { return n.is_leaf; }));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, std::string("partition: ") + e.what());
    }
    std::vector<bool> seen(p.n_leaves_, false);
    const std::size_t n_features = p.embedding_dim_ + (p.config_.append_score ? 1 : 0);
    for (const auto& nd : p.nodes_) {
      if (nd.is_leaf) {
        if (nd.leaf_id >= p.n_leaves_ || seen[nd.leaf_id]) throw Error(ErrorCode::FormatError, "leaf ids not dense");
        seen[nd.leaf_id] = true;
      } else if (nd.feature >= n_features || !std::isfinite(nd.threshold)) {
        throw Error(ErrorCode::FormatError, "bad split node");
      }
    }
    return p;
  }

 private:
  friend Partition fit_partition(std::span<const LabeledSample>, const PartitionConfig&);

  [[nodiscard]] nlohmann::json node_to_json(std::size_t k) const {
    const auto& nd = nodes_[k];
    if (nd.is_leaf) {
      return {{"leaf", nd.leaf_id}, {"n", nd.n}, {"mean_label", nd.mean_label}, {"mean_score", nd.mean_score}};
    }
    return {{"feature", nd.feature}, {"threshold", nd.threshold}, {"left", node_to_json(nd.left)},
            {"right", node_to_json(nd.right)}};
  }

  std::size_t read_node(const nlohmann::json& j) {
    const std::size_t k = nodes_.size();
    nodes_.emplace_back();
    if (j.contains("leaf")) {
      nodes_[k].leaf_id = j.at("leaf").get<std::size_t>();
      nodes_[k].n = j.value("n", std::size_t{0});
      nodes_[k].mean_label = j.value("mean_label", 0.0);
      nodes_[k].mean_score = j.value("mean_score", 0.0);
      return k;
    }
    nodes_[k].is_leaf = false;
    nodes_[k].feature = j.at("feature").get<std::size_t>();
    nodes_[k].threshold = j.at("threshold").get<double>();
    const auto left = read_node(j.at("left"));
    const auto right = read_node(j.at("right"));
    nodes_[k].left = left;
    nodes_[k].right = right;
    return k;
  }

  std::vector<Node> nodes_;
  std::size_t n_leaves_ = 0;
  std::size_t embedding_dim_ = 0;
  PartitionConfig config_;
  std::vector<std::string> train_ids_;
};

namespace detail {

struct SplitCandidate {
  double gain = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
};

/// Feature value f of sample i; index embedding_dim is the score when it is appended.
inline double feature_value(const LabeledSample& s, std::size_t f) {
  return f < s.embedding.size() ? s.embedding[f] : s.score;
}

/// Best variance-reduction split of the residuals (Y - S) over the given members.
/// Ties keep the lowest feature index, then the lowest threshold.
inline std::optional<SplitCandidate> best_split(std::span<const LabeledSample> samples,
                                                std::span<const std::size_t> members, std::size_t n_features,
                                                const PartitionConfig& cfg) {
  const std::size_t n = members.size();
  if (n < 2 * cfg.min_leaf || n < 2) return std::nullopt;

  double total = 0.0;
  for (auto i : members) total += static_cast<double>(samples[i].label) - samples[i].score;
  const double parent_term = total * total / static_cast<double>(n);
  // Gains at or below this are rounding noise, e.g. identical residuals everywhere.
  const double min_gain = 1e-12 * static_cast<double>(n);

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, double>> col(n);  // (feature value, residual)
  std::vector<std::size_t> gaps;                  // position i: split between col[i-1] and col[i]
  for (std::size_t f = 0; f < n_features; ++f) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& s = samples[members[k]];
      col[k] = {feature_value(s, f), static_cast<double>(s.label) - s.score};
    }
    std::sort(col.begin(), col.end());

    gaps.clear();
    for (std::size_t k = 1; k < n; ++k) {
      if (col[k].first > col[k - 1].first && k >= cfg.min_leaf && n - k >= cfg.min_leaf) gaps.push_back(k);
    }
    if (gaps.empty()) continue;
    if (cfg.max_candidates > 0 && gaps.size() > cfg.max_candidates) {
      // evenly spaced subset of the admissible gaps
      std::vector<std::size_t> picked;
      const std::size_t c = cfg.max_candidates;
      for (std::size_t q = 0; q < c; ++q) {
        const std::size_t pos = c == 1 ? gaps.size() / 2 : q * (gaps.size() - 1) / (c - 1);
        if (picked.empty() || picked.back() != gaps[pos]) picked.push_back(gaps[pos]);
      }
      gaps = std::move(picked);
    }

    double left_sum = 0.0;
    std::size_t k = 0;
    for (auto g : gaps) {
      for (; k < g; ++k) left_sum += col[k].second;
      const double nl = static_cast<double>(g);
      const double nr = static_cast<double>(n - g);
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
      if (gain <= min_gain) continue;
      if (!best || gain > best->gain) {
        const double lo = col[g - 1].first;
        const double hi = col[g].first;
        double t = lo + (hi - lo) / 2.0;
        if (!(t > lo)) t = hi;
        best = SplitCandidate{gain, f, t};
      }
    }
  }
  return best;
}

}  // namespace detail

/// Grows a regression tree on the residuals Y - S, best split first, until
/// `max_leaves` leaves exist or no admissible split reduces the squared loss.
inline Partition fit_partition(std::span<const LabeledSample> samples, const PartitionConfig& cfg) {
  if (cfg.max_leaves == 0) throw Error(ErrorCode::BadConfig, "max_leaves must be >= 1");
  if (samples.empty() || samples.size() < 2 * cfg.min_leaf) {
    throw Error(ErrorCode::TooFewSamples, std::to_string(samples.size()) + " samples for min_leaf " +
                                              std::to_string(cfg.min_leaf));
  }
  const std::size_t dim = samples.front().embedding.size();
  for (const auto& s : samples) {
    if (s.embedding.size() != dim) throw Error(ErrorCode::DimensionMismatch, "mixed embedding dims");
  }
  const std::size_t n_features = dim + (cfg.append_score ? 1 : 0);

  struct Grow {
    std::vector<std::size_t> members;
    std::optional<detail::SplitCandidate> split;
    std::size_t order;  // creation order, breaks gain ties
  };

  Partition p;
  p.config_ = cfg;
  p.embedding_dim_ = dim;
  p.train_ids_.reserve(samples.size());
  for (const auto& s : samples) p.train_ids_.push_back(s.id);

  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  p.nodes_.emplace_back();
  std::vector<Grow> grow(1);
  grow[0] = {std::move(all), std::nullopt, 0};
  grow[0].split = detail::best_split(samples, grow[0].members, n_features, cfg);
  std::size_t leaves = 1;
  std::size_t created = 1;

  while (leaves < cfg.max_leaves) {
    std::optional<std::size_t> pick;
    for (std::size_t k = 0; k < grow.size(); ++k) {
      if (!p.nodes_[k].is_leaf || !grow[k].split) continue;
      if (!pick || grow[k].split->gain > grow[*pick].split->gain ||
          (grow[k].split->gain == grow[*pick].split->gain && grow[k].order < grow[*pick].order)) {
        pick = k;
      }
    }
    if (!pick) break;

    const auto node = *pick;
    const auto split = *grow[node].split;
    std::vector<std::size_t> left, right;
    for (auto i : grow[node].members) {
      (detail::feature_value(samples[i], split.feature) < split.threshold ? left : right).push_back(i);
    }
    const std::size_t l = p.nodes_.size();
    const std::size_t r = l + 1;
    p.nodes_[node].is_leaf = false;
    p.nodes_[node].feature = split.feature;
    p.nodes_[node].threshold = split.threshold;
    p.nodes_[node].left = l;
    p.nodes_[node].right = r;
    p.nodes_.emplace_back();
    p.nodes_.emplace_back();
    grow.push_back({std::move(left), std::nullopt, created++});
    grow.push_back({std::move(right), std::nullopt, created++});
    grow[l].split = detail::best_split(samples, grow[l].members, n_features, cfg);
    grow[r].split = detail::best_split(samples, grow[r].members, n_features, cfg);
    grow[node].members.clear();
    grow[node].members.shrink_to_fit();
    ++leaves;
  }

  // dense leaf ids in left-to-right order
  std::size_t next_id = 0;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const auto k = stack.back();
    stack.pop_back();
    auto& nd = p.nodes_[k];
    if (!nd.is_leaf) {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
      continue;
    }
    nd.leaf_id = next_id++;
    nd.n = grow[k].members.size();
    double ls = 0.0, ss = 0.0;
    for (auto i : grow[k].members) {
      ls += samples[i].label;
      ss += samples[i].score;
    }
    nd.mean_label = ls / static_cast<double>(nd.n);
    nd.mean_score = ss / static_cast<double>(nd.n);
  }
  p.n_leaves_ = next_id;
  return p;
}

/// Latent groups: one group per partition leaf.
inline GroupAssignment leaf_groups(const Partition& partition, std::span<const LabeledSample> samples) {
  GroupAssignment out;
  out.group_of.reserve(samples.size());
  for (const auto& s : samples) out.group_of.emplace_back(partition.assign_leaf(s));
  for (std::size_t l = 0; l < partition.n_leaves(); ++l) out.names.push_back("leaf_" + std::to_string(l));
  return out;
}

}  // namespace groupcal
