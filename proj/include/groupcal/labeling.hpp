#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "groupcal/error.hpp"

namespace groupcal {

enum class Verdict { Entailment, Neutral, Contradiction };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Entailment: return "entailment";
    case Verdict::Neutral: return "neutral";
    case Verdict::Contradiction: return "contradiction";
  }
  return "neutral";
}

inline Verdict parse_verdict(std::string_view text) {
  if (text == "entailment") return Verdict::Entailment;
  if (text == "neutral") return Verdict::Neutral;
  if (text == "contradiction") return Verdict::Contradiction;
  throw Error(ErrorCode::FormatError, "unknown verdict '" + std::string(text) + "'");
}

/// NLI judgment of whether a ground-truth premise entails the model answer.
struct EntailmentVerdict {
  std::string id;
  std::string premise;
  std::string hypothesis;
  Verdict verdict = Verdict::Neutral;
  std::optional<double> confidence;
};

/// Ground-truth objects for one query. A premise is rendered per object by
/// substituting "{object}" in the template; without a template the object itself is the premise.
struct GroundTruthSet {
  std::string id;
  std::vector<std::string> objects;
  std::optional<std::string> premise_template;

  [[nodiscard]] std::string premise(const std::string& object) const {
    if (!premise_template) return object;
    std::string out = *premise_template;
    static constexpr std::string_view slot = "{object}";
    for (auto pos = out.find(slot); pos != std::string::npos; pos = out.find(slot, pos + object.size())) {
      out.replace(pos, slot.size(), object);
    }
    return out;
  }
};

/// An answer is correct when any ground-truth object entails it. Neutral counts as incorrect.
inline int label_answer(std::span<const EntailmentVerdict> verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::EmptyVerdicts, "no verdicts for query");
  const bool any = std::any_of(verdicts.begin(), verdicts.end(),
                               [](const EntailmentVerdict& v) { return v.verdict == Verdict::Entailment; });
  return any ? 1 : 0;
}

struct BatchLabels {
  std::map<std::string, int> labels;
  std::vector<std::string> unlabeled;
};

/// Labels every id that has verdict rows; ids without rows are reported as unlabeled.
inline BatchLabels batch_label(std::span<const std::string> ids, std::span<const EntailmentVerdict> verdicts) {
  std::map<std::string, std::vector<EntailmentVerdict>> by_id;
  std::map<std::pair<std::string, std::string>, Verdict> seen;
  for (const auto& v : verdicts) {
    auto [it, inserted] = seen.emplace(std::make_pair(v.premise, v.hypothesis), v.verdict);
    if (!inserted && it->second != v.verdict) {
      throw Error(ErrorCode::DuplicateConflict,
                  "conflicting verdicts for premise '" + v.premise + "' / hypothesis '" + v.hypothesis + "'");
    }
    by_id[v.id].push_back(v);
  }

  BatchLabels out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      out.unlabeled.push_back(id);
    } else {
      out.labels[id] = label_answer(it->second);
    }
  }
  return out;
}

/// NLI judge behind a client interface. Implementations must be safe to call concurrently.
/// An empty result means the request failed; callers report the query as unlabeled.
class NliClient {
 public:
  virtual ~NliClient() = default;
  [[nodiscard]] virtual std::optional<Verdict> judge(const std::string& premise,
                                                     const std::string& hypothesis) const = 0;
};

/// Answers from a cache of previously recorded verdicts. Immutable after construction.
class ReplayClient final : public NliClient {
 public:
  explicit ReplayClient(std::span<const EntailmentVerdict> rows) {
    for (const auto& v : rows) {
      auto [it, inserted] = cache_.emplace(std::make_pair(v.premise, v.hypothesis), v.verdict);
      if (!inserted && it->second != v.verdict) {
        throw Error(ErrorCode::DuplicateConflict,
                    "conflicting verdicts for premise '" + v.premise + "' / hypothesis '" + v.hypothesis + "'");
      }
    }
  }

  [[nodiscard]] std::optional<Verdict> judge(const std::string& premise,
                                             const std::string& hypothesis) const override {
    const auto it = cache_.find({premise, hypothesis});
    if (it == cache_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::size_t size() const noexcept { return cache_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, Verdict> cache_;
};

/// Labels one answer against all ground-truth objects. Returns nullopt when no
/// object entails the answer and at least one judge request failed.
inline std::optional<int> label_with_client(const GroundTruthSet& truth, const std::string& answer,
                                            const NliClient& client) {
  if (truth.objects.empty()) throw Error(ErrorCode::EmptyVerdicts, "ground truth for '" + truth.id + "' is empty");
  bool failed = false;
  for (const auto& object : truth.objects) {
    const auto v = client.judge(truth.premise(object), answer);
    if (!v) {
      failed = true;
    } else if (*v == Verdict::Entailment) {
      return 1;
    }
  }
  if (failed) return std::nullopt;
  return 0;
}

}  // namespace groupcal
