// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "groupcal/groupcal.hpp"

namespace {

using namespace groupcal;
using nlohmann::json;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double stderr_of(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------- 1

Outcome formula_fidelity() {
  // (ze, zc, p) and (row, score) from tests/oracles/nli_golden.py (mpmath, 50 digits)
  const std::vector<std::array<double, 3>> eq1 = {
      {0, 0, 0.5},
      {1, -1, 0.11920292202211755594},
      {-1, 1, 0.88079707797788244406},
      {2.5, 0.5, 0.11920292202211755594},
      {0.1, 0.2, 0.52497918747893998748},
      {-3, -7, 0.017986209962091558027},
      {10, 9, 0.26894142136999512075},
      {4.25, -2.75, 0.00091105119440064535786},
      {-0.5, 3.5, 0.98201379003790844197},
      {30, 31, 0.73105857863000487925},
  };
  const std::vector<std::pair<std::vector<double>, double>> eq2 = {
      {{0.2, 0.4, 0.6}, 0.6},
      {{0, 0, 0, 0}, 1.0},
      {{1, 1}, 0.0},
      {{0.1}, 0.9},
      {{0.9, 0.05, 0.3, 0.75, 0.5}, 0.5},
      {{0.33, 0.66}, 0.505},
      {{0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875}, 0.5},
      {{0.01, 0.02, 0.97}, 0.66666666666666666667},
      {std::vector<double>(20, 0.5), 0.5},
      {{0.7, 0.2, 0.45, 0.05, 0.95, 0.6}, 0.50833333333333333333},
  };
  double worst = 0.0;
  for (const auto& [ze, zc, p] : eq1) worst = std::max(worst, std::abs(contradiction_prob({ze, zc}) - p));
  for (const auto& [row, s] : eq2) {
    const auto m = ConsistencyMatrix::from_rows({row});
    worst = std::max(worst, std::abs(selfcheck_sentence_score(m, 0) - s));
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> z(-15.0, 15.0);
  double worst_complement = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = z(rng), b = z(rng);
    worst_complement = std::max(worst_complement, std::abs(contradiction_prob({a, b}) + contradiction_prob({b, a}) - 1.0));
  }
  return {worst <= 1e-12 && worst_complement <= 1e-12,
          "max golden error " + fmt(worst) + ", max complement error " + fmt(worst_complement)};
}

// ---------------------------------------------------------------- 2

double sse(const IsotonicCalibrator& c, const std::vector<double>& s, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += (c.apply(s[i]) - y[i]) * (c.apply(s[i]) - y[i]);
  return acc;
}

// Exhaustive search over nondecreasing assignments to the distinct scores, with values
// drawn from a grid. Minimizes sum over points of (f(s_i) - y_i)^2 by dynamic programming.
double monotone_grid_search(const std::vector<double>& s, const std::vector<double>& y, const std::vector<double>& grid) {
  std::map<double, std::pair<double, double>> groups;  // score -> (count, label sum)
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    groups[s[i]].first += 1.0;
    groups[s[i]].second += y[i];
    sum_sq += y[i] * y[i];
  }
  std::vector<double> cost(grid.size(), 0.0);
  for (const auto& [_, g] : groups) {
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < grid.size(); ++v) {
      running = std::min(running, cost[v]);
      cost[v] = running + g.first * grid[v] * grid[v] - 2.0 * grid[v] * g.second;
    }
  }
  return *std::min_element(cost.begin(), cost.end()) + sum_sq;
}

Outcome isotonic_optimality() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0, worst_fine = -1.0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + t % 8;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::floor(u(rng) * 6.0) / 6.0;
      y[i] = u(rng) < 0.5 ? 1.0 : 0.0;
    }
    // The optimum is constant on blocks of consecutive distinct scores and equals the
    // block mean, so the grid of every contiguous-block mean contains it.
    std::map<double, std::pair<double, double>> g;
    for (std::size_t i = 0; i < n; ++i) g[s[i]].first += 1, g[s[i]].second += y[i];
    std::vector<std::pair<double, double>> cells;
    for (const auto& [_, c] : g) cells.push_back(c);
    std::set<double> means;
    for (std::size_t a = 0; a < cells.size(); ++a) {
      double cnt = 0, sum = 0;
      for (std::size_t b = a; b < cells.size(); ++b) {
        cnt += cells[b].first, sum += cells[b].second;
        means.insert(sum / cnt);
      }
    }
    const std::vector<double> block_grid(means.begin(), means.end());
    std::vector<double> fine(1001);
    for (int k = 0; k <= 1000; ++k) fine[k] = k / 1000.0;

    const double got = sse(fit_isotonic(s, y), s, y);
    worst = std::max(worst, std::abs(got - monotone_grid_search(s, y, block_grid)));
    worst_fine = std::max(worst_fine, got - monotone_grid_search(s, y, fine));
  }

  bool monotone = true, mean_kept = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * 200);
    std::vector<double> s(n), y(n);
    const double power = 0.2 + 3.0 * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(rng);
      y[i] = u(rng) < std::pow(s[i], power) ? 1.0 : 0.0;
    }
    const auto c = fit_isotonic(s, y);
    for (std::size_t k = 1; k < c.knots().size(); ++k) monotone &= c.knots()[k].value >= c.knots()[k - 1].value;
    double fitted = 0.0, labels = 0.0;
    for (std::size_t i = 0; i < n; ++i) fitted += c.apply(s[i]), labels += y[i];
    mean_kept &= std::abs(fitted - labels) / static_cast<double>(n) <= 1e-9;
  }
  return {worst <= 1e-9 && worst_fine <= 1e-9 && monotone && mean_kept,
          "max |PAVA - grid optimum| " + fmt(worst) + ", PAVA - fine grid " + fmt(worst_fine) +
              ", monotone " + (monotone ? "yes" : "no") + ", mean kept " + (mean_kept ? "yes" : "no")};
}

// ---------------------------------------------------------------- synthetic regimes

synth::Cluster cluster(double weight, std::vector<double> center, double spread, synth::QDistribution q,
                       synth::Distortion d) {
  synth::Cluster c;
  c.weight = weight;
  c.center = std::move(center);
  c.spread = spread;
  c.q = q;
  c.distortion = d;
  return c;
}

constexpr auto kUniform = synth::QDistribution::Kind::Uniform;
constexpr auto kBeta = synth::QDistribution::Kind::Beta;
constexpr auto kLogistic = synth::Distortion::Kind::Logistic;
constexpr auto kShift = synth::Distortion::Kind::Shift;
constexpr auto kAffine = synth::Distortion::Kind::Affine;

std::vector<LabeledSample> generate(std::size_t n, std::size_t dim, std::vector<synth::Cluster> clusters,
                                    std::uint64_t seed) {
  synth::OracleConfig cfg;
  cfg.n = n;
  cfg.dim = dim;
  cfg.seed = seed;
  cfg.clusters = std::move(clusters);
  return synth::generate(cfg);
}

struct Splits {
  std::vector<LabeledSample> train, calib, test;
};

Splits split(const std::vector<LabeledSample>& all, std::uint64_t seed) {
  const auto s = split_dataset(all.size(), SplitRatios{}, seed);
  const std::span<const LabeledSample> v(all);
  return {select(v, std::span<const std::size_t>(s.train)), select(v, std::span<const std::size_t>(s.validation)),
          select(v, std::span<const std::size_t>(s.test))};
}

// ---------------------------------------------------------------- 3

Outcome decomposition_identity() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = generate(100000, 8,
                               {cluster(0.4, {3}, 1.0, {kUniform, 0.0, 1.0}, {kLogistic, 1.0, 1.0}),
                                cluster(0.35, {-3}, 1.0, {kBeta, 2.0, 3.0}, {kShift, -0.15, 0.0}),
                                cluster(0.25, {0, 3}, 1.0, {kBeta, 0.5, 0.5}, {kAffine, 0.5, 0.3})},
                               seed);
    worst = std::max(worst, std::abs(synth::true_metrics(data, 15).residual));
  }
  return {worst <= 0.005, "max |brier - (cl + gl_true + irreducible)| over 5 seeds " + fmt(worst)};
}

// ---------------------------------------------------------------- 4

Outcome gl_lower_bound_validity() {
  std::vector<double> lower, truth;
  std::size_t informative = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = generate(20000, 8,
                               {cluster(0.5, {3}, 1.0, {kUniform, 0.0, 1.0}, {kShift, 0.15, 0.0}),
                                cluster(0.5, {-3}, 1.0, {kUniform, 0.0, 1.0}, {kShift, -0.15, 0.0})},
                               seed);
    AuditConfig cfg;
    cfg.seed = seed;
    const auto a = audit_metrics(data, cfg);
    const double gt = synth::true_metrics(data, cfg.n_bins).gl_true;
    lower.push_back(*a.gl_lower);
    truth.push_back(gt);
    informative += *a.gl_lower > 0.5 * gt ? 1 : 0;
  }
  const double bound = mean(truth) + 2.0 * stderr_of(lower);
  const bool valid = mean(lower) <= bound;
  return {valid && informative == 20, "mean gl_lower " + fmt(mean(lower)) + " <= " + fmt(bound) +
                                          " (mean gl_true + 2 stderr); gl_lower > 0.5 gl_true on " +
                                          std::to_string(informative) + "/20 seeds"};
}

// ---------------------------------------------------------------- 5

Outcome calibration_increases_gl() {
  // Each group is scored monotonically, but the group with the higher accuracy gets the
  // lower scores, so the global isotonic fit pools the groups together.
  std::size_t hits = 0;
  double worst_cl = 0.0;
  std::vector<double> gl_before, gl_after;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = generate(10000, 8,
                               {cluster(0.5, {3}, 1.0, {kUniform, 0.6, 0.8}, {kAffine, 0.5, 0.0}),
                                cluster(0.5, {-3}, 1.0, {kUniform, 0.2, 0.4}, {kAffine, 0.5, 0.5})},
                               seed);
    const auto parts = split(data, seed);
    const auto global = fit_global_calibrator(calibration_set(parts.train, parts.calib, false));
    AuditConfig cfg;
    cfg.seed = seed;
    const auto before = audit_metrics(parts.test, cfg);
    const auto after = audit_metrics(apply_calibrator(global, parts.test), cfg);
    worst_cl = std::max(worst_cl, after.cl);
    gl_before.push_back(*before.gl_lower);
    gl_after.push_back(*after.gl_lower);
    if (after.cl < 0.005 && *after.gl_lower >= *before.gl_lower) ++hits;
  }
  return {hits >= 15, "CL < 0.005 and GL not reduced on " + std::to_string(hits) + "/20 seeds (max CL after " +
                          fmt(worst_cl) + ", mean GL " + fmt(mean(gl_before)) + " -> " + fmt(mean(gl_after)) + ")"};
}

// ---------------------------------------------------------------- 6

Outcome reconfidencing_wins() {
  std::size_t brier_wins = 0, gl_wins = 0;
  std::vector<double> gain;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = generate(10000, 8,
                               {cluster(0.4, {3}, 1.0, {kUniform, 0.0, 1.0}, {kLogistic, 1.0, 1.2}),
                                cluster(0.35, {-3}, 1.0, {kUniform, 0.0, 1.0}, {kLogistic, 1.0, -1.2}),
                                cluster(0.25, {0, 3}, 1.0, {kBeta, 2.0, 2.0}, {kLogistic, 0.7, 0.0})},
                               seed);
    const auto parts = split(data, seed);
    ReconfidencerConfig rc;
    rc.seed = seed;
    AuditConfig ac;
    ac.seed = seed;
    const std::vector<std::size_t> p{8};
    const auto rows = sweep_partitions(parts.train, parts.calib, parts.test, p, rc, ac);
    const auto& cal = rows[1];
    const auto& rec = rows[2];
    brier_wins += rec.brier <= cal.brier ? 1 : 0;
    gl_wins += *rec.gl_lower <= *cal.gl_lower ? 1 : 0;
    gain.push_back(cal.brier - rec.brier);
  }
  return {brier_wins >= 18 && gl_wins >= 18, "Brier wins " + std::to_string(brier_wins) + "/20, GL wins " +
                                                 std::to_string(gl_wins) + "/20, mean Brier gain " + fmt(mean(gain))};
}

// ---------------------------------------------------------------- 7

Outcome degenerate_equivalence() {
  const auto data = generate(4000, 8,
                             {cluster(0.5, {3}, 1.0, {kUniform, 0.0, 1.0}, {kLogistic, 1.0, 1.0}),
                              cluster(0.5, {-3}, 1.0, {kUniform, 0.0, 1.0}, {kLogistic, 1.0, -1.0})},
                             7);
  const auto parts = split(data, 7);
  ReconfidencerConfig rc;
  rc.max_leaves = 1;
  const auto model = fit_reconfidencer(parts.train, parts.calib, rc);
  const auto global = fit_global_calibrator(parts.calib);
  std::mt19937_64 rng(70);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 3.0);
  std::size_t equal = 0;
  std::vector<double> e(8);
  for (int i = 0; i < 10000; ++i) {
    const double s = u(rng);
    for (auto& x : e) x = g(rng);
    const double a = model.reconfidence(s, e);
    const double b = global.apply(s);
    equal += std::memcmp(&a, &b, sizeof(double)) == 0 ? 1 : 0;
  }
  return {equal == 10000, std::to_string(equal) + "/10000 outputs bitwise equal"};
}

// ---------------------------------------------------------------- 8

Outcome sweep_shape() {
  const std::vector<std::size_t> leaves{2, 4, 8, 16, 32, 64};
  std::vector<double> sum(leaves.size(), 0.0);
  std::size_t per_seed_ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<synth::Cluster> clusters;
    const double offsets[] = {-1.5, 1.5, -1.0, 1.0, -0.5, 0.5, -2.0, 2.0};
    for (std::size_t k = 0; k < 8; ++k) {
      std::vector<double> center(8, 0.0);
      center[k] = 4.0;
      clusters.push_back(cluster(0.125, center, 1.0, {kUniform, 0.0, 1.0}, {kLogistic, 1.0, offsets[k]}));
    }
    const auto data = generate(20000, 8, clusters, seed);
    const auto parts = split(data, seed);
    ReconfidencerConfig rc;
    rc.seed = seed;
    AuditConfig ac;
    ac.seed = seed;
    const auto rows = sweep_partitions(parts.train, parts.calib, parts.test, leaves, rc, ac);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      sum[k] += rows[2 + k].brier;
      best = std::min(best, rows[2 + k].brier);
    }
    per_seed_ok += rows[2 + 2].brier <= 1.02 * best ? 1 : 0;
  }
  const double best = *std::min_element(sum.begin(), sum.end());
  std::string curve;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    curve += (k ? " " : "") + std::to_string(leaves[k]) + ":" + fmt(100.0 * sum[k] / 10.0);
  }
  return {sum[2] <= 1.02 * best, "mean Brier x100 by p {" + curve + "}; p=8 within 2% of best on " +
                                     std::to_string(per_seed_ok) + "/10 seeds"};
}

// ---------------------------------------------------------------- 9

class Workdir {
 public:
  Workdir() : dir_(fs::temp_directory_path() / ("groupcal_acceptance_" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workdir() { fs::remove_all(dir_); }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

int cli(const std::string& args, const Workdir& w) {
  const std::string cmd = std::string(GROUPCAL_CLI) + " " + args + " >" + (w / "cli.log") + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_and_round_trip() {
  Workdir w;
  const std::string data = std::string(GROUPCAL_TEST_DATA);
  std::vector<std::string> failures;
  const auto twice = [&](const std::string& name, const std::string& args, const std::vector<std::string>& outputs) {
    std::vector<std::string> first;
    if (cli(args, w) != 0) return failures.push_back(name + " failed"), void();
    for (const auto& o : outputs) first.push_back(slurp(w / o));
    if (cli(args, w) != 0) return failures.push_back(name + " failed"), void();
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      if (slurp(w / outputs[k]) != first[k]) failures.push_back(name + ":" + outputs[k] + " differs");
    }
  };

  twice("synth", "synth " + data + "/oracle_two_clusters.toml -n 4000 -o " + (w / "synth.jsonl"), {"synth.jsonl"});
  twice("score", "score -i " + data + "/consistency_golden.jsonl -o " + (w / "scores.jsonl"), {"scores.jsonl"});
  {
    std::ofstream answers(w / "answers.jsonl"), verdicts(w / "verdicts.jsonl");
    for (int i = 0; i < 40; ++i) {
      answers << json{{"id", "q" + std::to_string(i)}, {"answer", "a"}}.dump() << '\n';
      verdicts << json{{"id", "q" + std::to_string(i)}, {"premise", "p" + std::to_string(i)}, {"hypothesis", "a"},
                       {"verdict", i % 3 == 0 ? "entailment" : "neutral"}}.dump()
               << '\n';
    }
  }
  twice("label",
        "--seed 3 label -i " + (w / "answers.jsonl") + " --replay " + (w / "verdicts.jsonl") + " -o " +
            (w / "labeled.jsonl") + " --sample-for-audit 5 --audit-output " + (w / "review.jsonl"),
        {"labeled.jsonl", "review.jsonl"});
  twice("audit", "--seed 3 audit -i " + (w / "synth.jsonl") + " -o " + (w / "audit") + " --group cluster --group latent",
        {"audit/report.json", "audit/curve.csv", "audit/diagram_cluster.csv", "audit/diagram_latent.csv"});
  twice("fit", "--seed 3 fit -i " + (w / "synth.jsonl") + " -o " + (w / "model.json"), {"model.json"});
  twice("apply", "apply -m " + (w / "model.json") + " -i " + (w / "synth.jsonl") + " -o " + (w / "applied.jsonl"),
        {"applied.jsonl"});
  twice("sweep", "--seed 3 sweep -i " + (w / "synth.jsonl") + " -o " + (w / "sweep.csv"), {"sweep.csv", "sweep.csv.json"});

  // fit -> apply -> audit on the fit set
  std::size_t reduced = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const std::string s = std::to_string(seed);
    const bool ok =
        cli("--seed " + s + " synth " + data + "/oracle_two_clusters.toml -n 4000 -o " + (w / "rt.jsonl"), w) == 0 &&
        cli("--seed " + s + " fit -i " + (w / "rt.jsonl") + " --mode calibrate -o " + (w / "rt_model.json"), w) == 0 &&
        cli("apply -m " + (w / "rt_model.json") + " -i " + (w / "rt.jsonl") + " -o " + (w / "rt_fixed.jsonl"), w) == 0 &&
        cli("--seed " + s + " audit -i " + (w / "rt.jsonl") + " -o " + (w / "rt_before"), w) == 0 &&
        cli("--seed " + s + " audit -i " + (w / "rt_fixed.jsonl") + " -o " + (w / "rt_after"), w) == 0;
    if (!ok) {
      failures.push_back("round trip seed " + s + " failed");
      continue;
    }
    const auto before = json::parse(slurp(w / "rt_before/report.json"));
    const auto after = json::parse(slurp(w / "rt_after/report.json"));
    reduced += after["cl"].get<double>() < before["cl"].get<double>() ? 1 : 0;
  }
  std::string detail = "7 subcommands byte-identical on rerun: " + std::string(failures.empty() ? "yes" : "no") +
                       "; CL reduced on " + std::to_string(reduced) + "/20 seeds";
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty() && reduced == 20, detail};
}

// ---------------------------------------------------------------- 10

Outcome labeling_protocol() {
  std::ifstream in(std::string(GROUPCAL_TEST_DATA) + "/labeling_fixture.jsonl");
  std::size_t total = 0, agree = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto c = json::parse(line);
    GroundTruthSet truth{c["id"], c["objects"].get<std::vector<std::string>>(), std::nullopt};
    if (c.contains("premise_template")) truth.premise_template = c["premise_template"].get<std::string>();
    std::vector<EntailmentVerdict> cache;
    for (std::size_t k = 0; k < truth.objects.size(); ++k) {
      const auto v = c["verdicts"][k].get<std::string>();
      if (v == "fail") continue;
      cache.push_back({truth.id, truth.premise(truth.objects[k]), c["answer"], parse_verdict(v), std::nullopt});
    }
    const ReplayClient client(cache);
    const auto got = label_with_client(truth, c["answer"].get<std::string>(), client);
    const bool ok = c["expected"].is_null() ? !got.has_value() : (got && *got == c["expected"].get<int>());
    agree += ok ? 1 : 0;
    ++total;
  }
  return {total == 50 && agree == total, std::to_string(agree) + "/" + std::to_string(total) + " fixture cases agree"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"formula fidelity", formula_fidelity},
      {"isotonic optimality", isotonic_optimality},
      {"decomposition identity", decomposition_identity},
      {"GL lower-bound validity", gl_lower_bound_validity},
      {"calibration increases GL", calibration_increases_gl},
      {"reconfidencing wins", reconfidencing_wins},
      {"degenerate equivalence", degenerate_equivalence},
      {"sweep shape", sweep_shape},
      {"determinism and round trip", determinism_and_round_trip},
      {"labeling protocol", labeling_protocol},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
