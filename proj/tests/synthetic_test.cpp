#include <gtest/gtest.h>

#include <cmath>

#include "groupcal/config.hpp"
#include "groupcal/jsonl.hpp"
#include "groupcal/synthetic.hpp"

namespace groupcal::synth {
namespace {

OracleConfig single(Distortion d, QDistribution q = {}, std::size_t n = 20000) {
  OracleConfig cfg;
  cfg.n = n;
  cfg.dim = 3;
  cfg.seed = 42;
  Cluster c;
  c.q = q;
  c.distortion = d;
  cfg.clusters.push_back(c);
  return cfg;
}

TEST(Synthetic, Deterministic) {
  const auto cfg = single({Distortion::Kind::Shift, 0.1, 0.0}, {}, 500);
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  ASSERT_EQ(a.size(), 500u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(jsonl::sample_to_json(a[i]).dump(), jsonl::sample_to_json(b[i]).dump());
  EXPECT_EQ(a[0].id, "syn-0000000");
  EXPECT_EQ(a[499].id, "syn-0000499");

  auto other = cfg;
  other.seed = 43;
  EXPECT_NE(generate(other)[0].score, a[0].score);
}

TEST(Synthetic, ChunksMatchSequential) {
  const auto cfg = single({Distortion::Kind::Identity}, {QDistribution::Kind::Beta, 2.0, 5.0}, 1000);
  const auto all = generate(cfg);
  for (std::size_t i : {0u, 1u, 499u, 500u, 999u}) {
    EXPECT_EQ(jsonl::sample_to_json(generate_one(cfg, i)).dump(), jsonl::sample_to_json(all[i]).dump());
  }
}

TEST(Synthetic, LabelsFollowQ) {
  const auto samples = generate(single({Distortion::Kind::Identity}));
  double y = 0.0, q = 0.0;
  for (const auto& s : samples) y += s.label, q += *s.q_true;
  const double n = static_cast<double>(samples.size());
  // binomial sd of the mean is at most 0.5 / sqrt(n)
  EXPECT_NEAR(y / n, q / n, 3.0 * 0.5 / std::sqrt(n));
  EXPECT_NEAR(q / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Synthetic, BetaMean) {
  const auto samples = generate(single({Distortion::Kind::Identity}, {QDistribution::Kind::Beta, 2.0, 5.0}));
  double q = 0.0;
  for (const auto& s : samples) q += *s.q_true;
  const double n = static_cast<double>(samples.size());
  const double var = 2.0 * 5.0 / (49.0 * 8.0);
  EXPECT_NEAR(q / n, 2.0 / 7.0, 4.0 * std::sqrt(var / n));
}

TEST(Synthetic, ShiftRaisesScores) {
  const auto samples = generate(single({Distortion::Kind::Shift, 0.2, 0.0}, {QDistribution::Kind::Uniform, 0.2, 0.6}));
  double gap = 0.0;
  for (const auto& s : samples) {
    EXPECT_NEAR(s.score - *s.q_true, 0.2, 1e-12);
    gap += s.score - s.label;
  }
  EXPECT_NEAR(gap / samples.size(), 0.2, 3.0 * 0.5 / std::sqrt(static_cast<double>(samples.size())));
}

TEST(Synthetic, Distortions) {
  EXPECT_EQ((Distortion{Distortion::Kind::Shift, 0.3, 0}(0.9)), 1.0);
  EXPECT_DOUBLE_EQ((Distortion{Distortion::Kind::Affine, 0.5, 0.25}(0.5)), 0.5);
  EXPECT_DOUBLE_EQ((Distortion{Distortion::Kind::Logistic, 1.0, 0.0}(0.3)), 0.3);
  EXPECT_GT((Distortion{Distortion::Kind::Logistic, 1.0, 1.0}(0.3)), 0.3);
  EXPECT_EQ((Distortion{Distortion::Kind::Constant, 0.4, 0}(0.9)), 0.4);
}

TEST(TrueMetrics, ConstantScoreOverTwoGroups) {
  OracleConfig cfg;
  cfg.n = 10000;
  cfg.dim = 2;
  cfg.seed = 1;
  for (double q : {0.2, 0.8}) {
    Cluster c;
    c.weight = 0.5;
    c.center = {q * 10.0};
    c.q = {QDistribution::Kind::Uniform, q, q};
    c.distortion = {Distortion::Kind::Constant, 0.5, 0.0};
    cfg.clusters.push_back(c);
  }
  const auto samples = generate(cfg);
  const auto m = true_metrics(samples, 15);
  double frac = 0.0;
  for (const auto& s : samples) frac += *s.q_true == 0.8;
  frac /= samples.size();
  const double c = 0.2 + 0.6 * frac;
  // one bin: CL = (0.5 - C)^2, GL = Var(Q), IL = 0.16
  EXPECT_NEAR(m.cl, (0.5 - c) * (0.5 - c), 1e-12);
  EXPECT_NEAR(m.gl_true, 0.36 * frac * (1.0 - frac), 1e-12);
  EXPECT_NEAR(m.irreducible, 0.16, 1e-12);
  EXPECT_NEAR(m.gl_true, 0.09, 0.002);
}

TEST(TrueMetrics, IdentityWithinBinSpread) {
  const auto m = true_metrics(generate(single({Distortion::Kind::Identity})), 15);
  // S = Q, so both terms are the within-bin variance of uniform scores: (1/15)^2 / 12
  EXPECT_NEAR(m.cl, m.gl_true, 1e-15);
  EXPECT_NEAR(m.cl, 1.0 / (15.0 * 15.0 * 12.0), 5e-5);
}

TEST(TrueMetrics, DecompositionCloses) {
  std::ifstream in(std::string(GROUPCAL_TEST_DATA) + "/oracle_two_clusters.toml");
  auto cfg = config_from_json(config::parse_toml(in));
  cfg.n = 20000;
  const auto m = true_metrics(generate(cfg), 15);
  EXPECT_GT(m.gl_true, 0.01);
  EXPECT_LT(std::abs(m.residual), 0.01);
}

TEST(Synthetic, ConfigErrors) {
  auto cfg = single({Distortion::Kind::Identity});
  cfg.clusters[0].weight = 0.7;
  EXPECT_THROW(generate(cfg), Error);
  cfg = single({Distortion::Kind::Affine, -1.0, 0.0});
  EXPECT_THROW(cfg.validate(), Error);
  cfg = single({Distortion::Kind::Identity}, {QDistribution::Kind::Beta, 0.0, 1.0});
  EXPECT_THROW(cfg.validate(), Error);
  try {
    (void)config_from_json(nlohmann::json::parse(R"({"n":5,"cluster":[{"weight":1.0,"distortion":"warp"}]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadConfig);
  }
}

TEST(TrueMetrics, MissingQ) {
  auto samples = generate(single({Distortion::Kind::Identity}, {}, 20));
  samples[3].q_true.reset();
  try {
    (void)true_metrics(samples, 15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingQ);
  }
}

}  // namespace
}  // namespace groupcal::synth
