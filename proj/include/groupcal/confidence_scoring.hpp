#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "groupcal/error.hpp"

namespace groupcal {

/// Raw NLI logits for the entailment and contradiction classes.
struct NliLogits {
  double entail = 0.0;
  double contradict = 0.0;
};

/// P(contradict | sentence, document) with the neutral class ignored:
/// exp(zc) / (exp(ze) + exp(zc)), evaluated as logistic(zc - ze) so large logits do not overflow.
inline double contradiction_prob(const NliLogits& logits) {
  if (!std::isfinite(logits.entail) || !std::isfinite(logits.contradict)) {
    throw Error(ErrorCode::NonFiniteLogit, "logits must be finite");
  }
  const double d = logits.contradict - logits.entail;
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

/// Contradiction probabilities; rows are sentences of the main response,
/// columns are the resampled documents.
class ConsistencyMatrix {
 public:
  ConsistencyMatrix(std::size_t n_sentences, std::size_t n_documents, std::vector<double> probs)
      : rows_(n_sentences), cols_(n_documents), probs_(std::move(probs)) {
    if (rows_ == 0 || cols_ == 0) throw Error(ErrorCode::EmptyInput, "consistency matrix needs m >= 1 and n >= 1");
    if (probs_.size() != rows_ * cols_) throw Error(ErrorCode::DimensionMismatch, "matrix size does not match shape");
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw Error(ErrorCode::NonFiniteValue, "contradiction probabilities must lie in [0,1]");
      }
    }
  }

  static ConsistencyMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      throw Error(ErrorCode::EmptyInput, "consistency matrix needs m >= 1 and n >= 1");
    }
    const std::size_t n = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * n);
    for (const auto& r : rows) {
      if (r.size() != n) throw Error(ErrorCode::DimensionMismatch, "ragged consistency matrix");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return {rows.size(), n, std::move(flat)};
  }

  [[nodiscard]] std::size_t sentences() const noexcept { return rows_; }
  [[nodiscard]] std::size_t documents() const noexcept { return cols_; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    if (i >= rows_) throw Error(ErrorCode::IndexOutOfRange, "sentence index " + std::to_string(i));
    return {probs_.data() + i * cols_, cols_};
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> probs_;
};

/// Consistency confidence of one sentence: 1 minus its mean contradiction
/// probability over all resampled documents.
inline double selfcheck_sentence_score(const ConsistencyMatrix& matrix, std::size_t sentence) {
  const auto r = matrix.row(sentence);
  double sum = 0.0;
  for (double p : r) sum += p;
  return std::clamp(1.0 - sum / static_cast<double>(r.size()), 0.0, 1.0);
}

enum class SentenceAggregation { Mean, Min };

inline double selfcheck_answer_score(const ConsistencyMatrix& matrix,
                                     SentenceAggregation aggregation = SentenceAggregation::Mean) {
  double acc = aggregation == SentenceAggregation::Min ? 1.0 : 0.0;
  for (std::size_t i = 0; i < matrix.sentences(); ++i) {
    const double s = selfcheck_sentence_score(matrix, i);
    acc = aggregation == SentenceAggregation::Min ? std::min(acc, s) : acc + s;
  }
  if (aggregation == SentenceAggregation::Mean) acc /= static_cast<double>(matrix.sentences());
  return std::clamp(acc, 0.0, 1.0);
}

struct VerbalizedGuess {
  std::string guess;
  double probability = 0.0;
};

struct JafcParse {
  std::vector<VerbalizedGuess> guesses;
  std::optional<std::size_t> selected;

  [[nodiscard]] const VerbalizedGuess* best() const { return selected ? &guesses[*selected] : nullptr; }
};

/// Extracts "Guess: ... / Probability: ..." pairs from a verbalized-confidence
/// response and selects the most probable guess (first one on ties).
/// At most `max_guesses` pairs are kept when it is nonzero.
inline JafcParse parse_jafc_response(const std::string& text, std::size_t max_guesses = 0) {
  static const std::regex pair_re(
      R"(guess\s*:\s*([^\n]*?)\s*probability\s*:\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(%)?)",
      std::regex::ECMAScript | std::regex::icase);

  JafcParse out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pair_re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string guess = m[1].str();
    while (!guess.empty() && (guess.back() == ' ' || guess.back() == '\t' || guess.back() == '\r')) guess.pop_back();
    if (guess.empty()) continue;
    double p = std::stod(m[2].str());
    if (m[3].matched) p /= 100.0;
    if (!std::isfinite(p)) continue;
    out.guesses.push_back({std::move(guess), std::clamp(p, 0.0, 1.0)});
    if (max_guesses != 0 && out.guesses.size() == max_guesses) break;
  }
  for (std::size_t i = 0; i < out.guesses.size(); ++i) {
    if (!out.selected || out.guesses[i].probability > out.guesses[*out.selected].probability) out.selected = i;
  }
  return out;
}

}  // namespace groupcal
