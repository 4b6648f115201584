#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcal/binning.hpp"
#include "groupcal/data_model.hpp"
#include "groupcal/error.hpp"
#include "groupcal/random.hpp"

namespace groupcal::synth {

/// Monotone map from the true posterior Q to the reported score S.
struct Distortion {
  enum class Kind { Identity, Shift, Affine, Logistic, Constant };
  Kind kind = Kind::Identity;
  double a = 1.0;  // shift amount, slope, logit slope or constant value
  double b = 0.0;  // intercept / logit offset

  [[nodiscard]] double operator()(double q) const {
    switch (kind) {
      case Kind::Identity: return q;
      case Kind::Shift: return std::clamp(q + a, 0.0, 1.0);
      case Kind::Affine: return std::clamp(a * q + b, 0.0, 1.0);
      case Kind::Logistic: {
        if (a == 0.0) return 1.0 / (1.0 + std::exp(-b));
        if (q <= 0.0) return 0.0;
        if (q >= 1.0) return 1.0;
        const double z = a * std::log(q / (1.0 - q)) + b;
        return 1.0 / (1.0 + std::exp(-z));
      }
      case Kind::Constant: return a;
    }
    return q;
  }
};

struct QDistribution {
  enum class Kind { Uniform, Beta };
  Kind kind = Kind::Uniform;
  double p1 = 0.0;  // uniform low, or beta alpha
  double p2 = 1.0;  // uniform high, or beta beta
};

struct Cluster {
  double weight = 1.0;
  std::vector<double> center;  // zero-padded to the embedding dim
  double spread = 1.0;         // isotropic standard deviation
  QDistribution q;
  Distortion distortion;
};

struct OracleConfig {
  std::size_t n = 0;
  std::size_t dim = 8;
  std::vector<Cluster> clusters;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim < 1) throw Error(ErrorCode::BadConfig, "dim must be >= 1");
    if (clusters.empty()) throw Error(ErrorCode::BadConfig, "at least one cluster is required");
    double total = 0.0;
    for (const auto& c : clusters) {
      if (!(c.weight > 0.0)) throw Error(ErrorCode::BadConfig, "cluster weights must be positive");
      total += c.weight;
      if (c.center.size() > dim) throw Error(ErrorCode::BadConfig, "cluster center longer than dim");
      if (!(c.spread >= 0.0)) throw Error(ErrorCode::BadConfig, "spread must be >= 0");
      if (c.q.kind == QDistribution::Kind::Uniform && !(0.0 <= c.q.p1 && c.q.p1 <= c.q.p2 && c.q.p2 <= 1.0)) {
        throw Error(ErrorCode::BadConfig, "uniform q range must satisfy 0 <= lo <= hi <= 1");
      }
      if (c.q.kind == QDistribution::Kind::Beta && !(c.q.p1 > 0.0 && c.q.p2 > 0.0)) {
        throw Error(ErrorCode::BadConfig, "beta parameters must be positive");
      }
      const auto k = c.distortion.kind;
      if ((k == Distortion::Kind::Affine || k == Distortion::Kind::Logistic) && c.distortion.a < 0.0) {
        throw Error(ErrorCode::BadConfig, "distortion slope must be >= 0 to stay monotone");
      }
      if (k == Distortion::Kind::Constant && !(c.distortion.a >= 0.0 && c.distortion.a <= 1.0)) {
        throw Error(ErrorCode::BadConfig, "constant score must be in [0,1]");
      }
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::BadConfig, "cluster weights must sum to 1");
  }
};

namespace detail {

inline double standard_normal(Rng& rng) {
  // Box-Muller; one draw per call keeps the per-sample stream simple
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Marsaglia-Tsang
inline double gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double u = 1.0 - uniform01(rng);
    return gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - uniform01(rng);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

inline double draw_q(Rng& rng, const QDistribution& q) {
  if (q.kind == QDistribution::Kind::Uniform) return q.p1 + (q.p2 - q.p1) * uniform01(rng);
  const double x = gamma(rng, q.p1);
  const double y = gamma(rng, q.p2);
  return x / (x + y);
}

inline std::string sample_id(std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 7) digits.insert(0, 7 - digits.size(), '0');
  return "syn-" + digits;
}

}  // namespace detail

/// Draws one sample; each index has its own counter-seeded stream so chunks can be
/// generated independently and still match the sequential output.
inline LabeledSample generate_one(const OracleConfig& cfg, std::size_t index) {
  auto rng = Rng(derive_seed(derive_seed(cfg.seed, streams::kSynth), index));
  const double u = uniform01(rng);
  std::size_t k = 0;
  double acc = cfg.clusters[0].weight;
  while (u >= acc && k + 1 < cfg.clusters.size()) acc += cfg.clusters[++k].weight;
  const auto& c = cfg.clusters[k];

  LabeledSample s;
  s.id = detail::sample_id(index);
  const double q = std::clamp(detail::draw_q(rng, c.q), 0.0, 1.0);
  s.q_true = q;
  s.label = uniform01(rng) < q ? 1 : 0;
  s.embedding.resize(cfg.dim);
  for (std::size_t d = 0; d < cfg.dim; ++d) {
    const double mu = d < c.center.size() ? c.center[d] : 0.0;
    s.embedding[d] = mu + c.spread * detail::standard_normal(rng);
  }
  s.score = c.distortion(q);
  s.features.emplace("cluster", static_cast<std::int64_t>(k));
  return s;
}

inline std::vector<LabeledSample> generate(const OracleConfig& cfg) {
  cfg.validate();
  std::vector<LabeledSample> out;
  out.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) out.push_back(generate_one(cfg, i));
  return out;
}

/// Decomposition terms computed from the known posteriors. C is the mean of Q within
/// each quantile score bin.
struct TrueMetrics {
  double brier = 0.0;
  double cl = 0.0;
  double gl_true = 0.0;
  double irreducible = 0.0;
  double residual = 0.0;  // brier - (cl + gl_true + irreducible)
};

inline TrueMetrics true_metrics(std::span<const LabeledSample> samples, std::size_t n_bins) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
  for (const auto& s : samples) {
    if (!s.q_true) throw Error(ErrorCode::MissingQ, "record '" + s.id + "' has no q_true");
  }
  const auto scores = scores_of(samples);
  const auto binning = Binning::quantile(scores, n_bins);
  std::vector<double> q_sum(binning.size(), 0.0);
  std::vector<std::size_t> count(binning.size(), 0);
  for (const auto& s : samples) {
    const auto b = binning.assign(s.score);
    q_sum[b] += *s.q_true;
    ++count[b];
  }
  TrueMetrics m;
  for (const auto& s : samples) {
    const auto b = binning.assign(s.score);
    const double c = q_sum[b] / static_cast<double>(count[b]);
    const double q = *s.q_true;
    const double y = static_cast<double>(s.label);
    m.brier += (s.score - y) * (s.score - y);
    m.cl += (s.score - c) * (s.score - c);
    m.gl_true += (c - q) * (c - q);
    m.irreducible += q * (1.0 - q);
  }
  const double n = static_cast<double>(samples.size());
  m.brier /= n;
  m.cl /= n;
  m.gl_true /= n;
  m.irreducible /= n;
  m.residual = m.brier - (m.cl + m.gl_true + m.irreducible);
  return m;
}

inline nlohmann::json to_json(const TrueMetrics& m) {
  return {{"brier", m.brier}, {"cl", m.cl}, {"gl_true", m.gl_true}, {"irreducible", m.irreducible},
          {"residual", m.residual}};
}

/// Builds a config from the JSON form of the TOML document:
///   n, dim, seed, and one [[cluster]] table per cluster with weight, center, spread,
///   q = "uniform"|"beta", q_params = [p1, p2],
///   distortion = "identity"|"shift"|"affine"|"logistic"|"constant", distortion_params = [a, b].
inline OracleConfig config_from_json(const nlohmann::json& j) {
  OracleConfig cfg;
  try {
    cfg.n = j.value("n", std::size_t{0});
    cfg.dim = j.value("dim", std::size_t{8});
    cfg.seed = j.value("seed", std::uint64_t{0});
    const auto& clusters = j.contains("cluster") ? j.at("cluster") : j.at("clusters");
    for (const auto& jc : clusters) {
      Cluster c;
      c.weight = jc.value("weight", 1.0);
      c.center = jc.value("center", std::vector<double>{});
      c.spread = jc.value("spread", 1.0);
      const auto q_kind = jc.value("q", std::string("uniform"));
      const auto qp = jc.value("q_params", std::vector<double>{0.0, 1.0});
      if (qp.size() != 2) throw Error(ErrorCode::BadConfig, "q_params needs two values");
      if (q_kind == "uniform") {
        c.q = {QDistribution::Kind::Uniform, qp[0], qp[1]};
      } else if (q_kind == "beta") {
        c.q = {QDistribution::Kind::Beta, qp[0], qp[1]};
      } else {
        throw Error(ErrorCode::BadConfig, "unknown q distribution '" + q_kind + "'");
      }
      const auto d_kind = jc.value("distortion", std::string("identity"));
      const auto dp = jc.value("distortion_params", std::vector<double>{});
      const auto param = [&](std::size_t i, double fallback) { return i < dp.size() ? dp[i] : fallback; };
      if (d_kind == "identity") {
        c.distortion = {Distortion::Kind::Identity, 1.0, 0.0};
      } else if (d_kind == "shift") {
        c.distortion = {Distortion::Kind::Shift, param(0, 0.0), 0.0};
      } else if (d_kind == "affine") {
        c.distortion = {Distortion::Kind::Affine, param(0, 1.0), param(1, 0.0)};
      } else if (d_kind == "logistic") {
        c.distortion = {Distortion::Kind::Logistic, param(0, 1.0), param(1, 0.0)};
      } else if (d_kind == "constant") {
        c.distortion = {Distortion::Kind::Constant, param(0, 0.5), 0.0};
      } else {
        throw Error(ErrorCode::BadConfig, "unknown distortion '" + d_kind + "'");
      }
      cfg.clusters.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("oracle config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace groupcal::synth
