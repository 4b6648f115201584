#pragma once

// Subcommand implementations behind the `groupcal` executable. Each command reads and
// writes files only; option parsing lives in tools/groupcal_cli.cpp.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupcal/groupcal.hpp"
#include "groupcal/nli_http_client.hpp"

namespace groupcal::cli {

using json = nlohmann::json;

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kIoFailure = 2 };

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::string model;           // apply
  std::string truth;           // label: ground-truth objects
  std::string replay;          // label: cached verdicts
  std::string nli_url;         // label: live judge
  std::string nli_path = "/nli";
  double nli_timeout = 10.0;
  std::string unlabeled;       // label: side channel for unlabeled ids
  std::size_t sample_for_audit = 0;
  std::string audit_output;
  std::string oracle;          // synth: oracle config file
  std::optional<std::size_t> synth_n;

  std::size_t n_bins = 15;
  std::size_t max_leaves = 8;
  std::size_t min_leaf = 30;
  std::size_t min_leaf_fit = 20;
  SplitRatios ratios{0.25, 0.25, 0.50};
  bool stratify = false;
  std::uint64_t seed = 0;
  bool seed_given = false;  // synth: override the oracle config's seed
  bool scale_by_100 = true;
  bool debias_cl = false;
  bool debias_gl = true;
  bool pooled = false;
  bool append_score = false;
  std::vector<std::string> groups;
  std::size_t strata = 8;
  std::size_t min_group_n = 5;
  std::vector<std::size_t> leaf_counts{2, 4, 8, 16, 32, 64};
  std::string mode = "reconfidence";
  std::string aggregation = "mean";
  std::size_t n_guesses = 0;
};

inline json to_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"n_bins", c.n_bins},
            {"max_leaves", c.max_leaves},
            {"min_leaf", c.min_leaf},
            {"min_leaf_fit", c.min_leaf_fit},
            {"ratios", {c.ratios.train, c.ratios.validation, c.ratios.test}},
            {"stratify", c.stratify},
            {"seed", c.seed},
            {"scale_by_100", c.scale_by_100},
            {"cl_estimator", to_string(c.debias_cl ? CalibrationEstimator::Debiased : CalibrationEstimator::Plain)},
            {"gl_debias", c.debias_gl},
            {"pooled", c.pooled},
            {"append_score", c.append_score}};
  if (c.command == "audit") {
    j["groups"] = c.groups;
    j["strata"] = c.strata;
    j["min_group_n"] = c.min_group_n;
  }
  if (c.command == "sweep") j["leaf_counts"] = c.leaf_counts;
  if (c.command == "fit") j["mode"] = c.mode;
  if (c.command == "score") {
    j["aggregation"] = c.aggregation;
    j["n_guesses"] = c.n_guesses;
  }
  return j;
}

namespace detail {

inline double scaled(const RunConfig& c, double v) { return c.scale_by_100 ? 100.0 * v : v; }

inline AuditConfig audit_config(const RunConfig& c) {
  AuditConfig a;
  a.n_bins = c.n_bins;
  a.max_leaves = c.max_leaves;
  a.min_leaf = c.min_leaf;
  a.append_score = c.append_score;
  a.debias = c.debias_gl;
  a.cl_estimator = c.debias_cl ? CalibrationEstimator::Debiased : CalibrationEstimator::Plain;
  a.seed = c.seed;
  return a;
}

inline ReconfidencerConfig reconfidencer_config(const RunConfig& c) {
  ReconfidencerConfig r;
  r.max_leaves = c.max_leaves;
  r.min_leaf = c.min_leaf;
  r.min_leaf_fit = c.min_leaf_fit;
  r.append_score = c.append_score;
  r.pooled = c.pooled;
  r.seed = derive_seed(c.seed, streams::kPartition);
  return r;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

inline std::vector<LabeledSample> load_validated(const std::string& path, ValidationReport* report = nullptr) {
  const auto raw = jsonl::read_samples(path);
  auto checked = validate_dataset(raw);
  for (const auto& v : checked.report.violations) std::cerr << "warning: " << v << '\n';
  if (report) *report = checked.report;
  return std::move(checked.records);
}

inline DatasetSplit make_split(const RunConfig& c, std::span<const LabeledSample> samples) {
  if (!c.stratify) return split_dataset(samples.size(), c.ratios, c.seed);
  std::vector<std::string> keys;
  keys.reserve(samples.size());
  for (const auto& s : samples) keys.push_back(s.relation.value_or(""));
  return split_dataset_stratified(keys, c.ratios, c.seed);
}

inline json validation_to_json(const ValidationReport& r) {
  return {{"n_records", r.n_records}, {"embedding_dim", r.embedding_dim}, {"n_clamped", r.n_clamped},
          {"n_positive", r.n_positive}, {"n_negative", r.n_negative}};
}

inline std::string safe_name(const std::string& s) {
  std::string out = s;
  for (auto& ch : out) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  return out;
}

}  // namespace detail

/// score: consistency rows {"id", "contradiction": [[p,...],...]} or {"id", "logits":
/// [[[ze, zc],...],...]}, and verbalized rows {"id", "raw_response": str}. Other fields
/// pass through; unparseable verbalized rows are kept with "flag": "unparseable" and no score.
inline int cmd_score(const RunConfig& c) {
  const auto rows = jsonl::read_file(c.input);
  const auto agg = c.aggregation == "min" ? SentenceAggregation::Min : SentenceAggregation::Mean;
  if (c.aggregation != "min" && c.aggregation != "mean") {
    throw Error(ErrorCode::BadConfig, "aggregation must be mean or min");
  }
  std::vector<json> out;
  out.reserve(rows.size());
  std::size_t flagged = 0;
  for (const auto& row : rows) {
    json o = row;
    try {
      if (row.contains("contradiction")) {
        const auto m = ConsistencyMatrix::from_rows(row.at("contradiction").get<std::vector<std::vector<double>>>());
        o.erase("contradiction");
        o["score"] = selfcheck_answer_score(m, agg);
      } else if (row.contains("logits")) {
        std::vector<std::vector<double>> probs;
        for (const auto& sentence : row.at("logits")) {
          auto& r = probs.emplace_back();
          for (const auto& pair : sentence) r.push_back(contradiction_prob({pair.at(0).get<double>(), pair.at(1).get<double>()}));
        }
        o.erase("logits");
        o["score"] = selfcheck_answer_score(ConsistencyMatrix::from_rows(probs), agg);
      } else if (row.contains("raw_response")) {
        const auto parsed = parse_jafc_response(row.at("raw_response").get<std::string>(), c.n_guesses);
        o.erase("raw_response");
        if (const auto* best = parsed.best()) {
          o["score"] = best->probability;
          o["answer"] = best->guess;
        } else {
          o["flag"] = "unparseable";
          ++flagged;
        }
      } else {
        throw Error(ErrorCode::FormatError, "row has neither contradiction, logits nor raw_response");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "row '" + row.value("id", std::string("?")) + "': " + e.what());
    }
    out.push_back(std::move(o));
  }
  jsonl::write_file(c.output, out);
  if (flagged > 0) std::cerr << flagged << " unparseable verbalized responses flagged\n";
  return kSuccess;
}

/// label: answers {"id", "answer", ...} plus either ground truth {"id", "objects": [...],
/// "premise_template"?} judged through the replay cache or a live judge, or, without
/// ground truth, the replay rows grouped by id.
inline int cmd_label(const RunConfig& c) {
  const auto answers = jsonl::read_file(c.input);
  std::vector<EntailmentVerdict> verdict_rows;
  if (!c.replay.empty()) {
    for (const auto& r : jsonl::read_file(c.replay)) {
      try {
        verdict_rows.push_back({r.at("id").get<std::string>(), r.at("premise").get<std::string>(),
                                r.at("hypothesis").get<std::string>(), parse_verdict(r.at("verdict").get<std::string>()),
                                std::nullopt});
      } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("verdict row: ") + e.what());
      }
    }
  }

  std::map<std::string, std::optional<int>> labels;
  std::map<std::string, GroundTruthSet> truth;
  if (!c.truth.empty()) {
    for (const auto& r : jsonl::read_file(c.truth)) {
      try {
        GroundTruthSet g{r.at("id").get<std::string>(), r.at("objects").get<std::vector<std::string>>(), std::nullopt};
        if (r.contains("premise_template")) g.premise_template = r.at("premise_template").get<std::string>();
        truth.emplace(g.id, std::move(g));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("ground-truth row: ") + e.what());
      }
    }
    std::unique_ptr<NliClient> client;
    if (!c.nli_url.empty()) {
      client = std::make_unique<HttpNliClient>(c.nli_url, c.nli_path, c.nli_timeout);
    } else {
      if (c.replay.empty()) throw Error(ErrorCode::BadConfig, "label needs --replay or --nli-url");
      client = std::make_unique<ReplayClient>(verdict_rows);
    }
    for (const auto& a : answers) {
      const auto id = a.at("id").get<std::string>();
      const auto it = truth.find(id);
      if (it == truth.end() || !a.contains("answer")) {
        labels[id] = std::nullopt;
        continue;
      }
      labels[id] = label_with_client(it->second, a.at("answer").get<std::string>(), *client);
    }
  } else {
    std::vector<std::string> ids;
    for (const auto& a : answers) ids.push_back(a.at("id").get<std::string>());
    const auto batch = batch_label(ids, verdict_rows);
    for (const auto& id : ids) {
      const auto it = batch.labels.find(id);
      labels[id] = it == batch.labels.end() ? std::nullopt : std::optional<int>(it->second);
    }
  }

  std::vector<json> out;
  std::vector<std::string> unlabeled;
  for (const auto& a : answers) {
    const auto id = a.at("id").get<std::string>();
    if (const auto l = labels[id]) {
      json o = a;
      o["label"] = *l;
      out.push_back(std::move(o));
    } else {
      unlabeled.push_back(id);
    }
  }
  jsonl::write_file(c.output, out);

  std::ostringstream side;
  for (const auto& id : unlabeled) side << id << '\n';
  if (!c.unlabeled.empty()) {
    detail::write_text(c.unlabeled, side.str());
  } else if (!unlabeled.empty()) {
    std::cerr << unlabeled.size() << " unlabeled ids:\n" << side.str();
  }

  if (c.sample_for_audit > 0 && !out.empty()) {
    // k labeled pairs for manual review, drawn without replacement
    std::vector<std::size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng(c.seed, streams::kAuditSample);
    const std::size_t k = std::min(c.sample_for_audit, idx.size());
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(idx.size() - i));
      std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
    }
    std::vector<json> picked;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& row = out[idx[i]];
      json p = {{"id", row.at("id")}, {"label", row.at("label")}};
      if (row.contains("answer")) p["answer"] = row.at("answer");
      const auto t = truth.find(row.at("id").get<std::string>());
      if (t != truth.end()) p["objects"] = t->second.objects;
      picked.push_back(std::move(p));
    }
    jsonl::write_file(c.audit_output.empty() ? c.output + ".audit.jsonl" : c.audit_output, picked);
  }
  return kSuccess;
}

/// audit: writes report.json, curve.csv and one diagram_<group>.csv per requested grouping
/// into the output directory.
inline int cmd_audit(const RunConfig& c) {
  ValidationReport vrep;
  const auto samples = detail::load_validated(c.input, &vrep);
  const auto acfg = detail::audit_config(c);
  const auto audit = audit_metrics(samples, acfg);

  std::filesystem::create_directories(c.output);
  const auto dir = std::filesystem::path(c.output);

  json report = {{"brier", detail::scaled(c, audit.brier)}, {"cl", detail::scaled(c, audit.cl)}};
  if (audit.gl_lower) report["gl_lower"] = detail::scaled(c, *audit.gl_lower);
  report["scaled_by_100"] = c.scale_by_100;
  report["cl_estimator"] = to_string(acfg.cl_estimator);
  report["bins"] = to_json(audit.curve)["bins"];
  if (audit.gl_report) {
    report["grouping_loss"] = to_json(*audit.gl_report);
    report["grouping_loss"]["protocol"] =
        "fresh partition grown on residuals of a seeded half of the input, evaluated on the other half";
    report["grouping_loss"]["fit_n"] = audit.gl_fit_n;
    report["grouping_loss"]["eval_n"] = audit.gl_eval_n;
  }
  if (std::all_of(samples.begin(), samples.end(), [](const LabeledSample& s) { return s.q_true.has_value(); })) {
    auto t = synth::true_metrics(samples, c.n_bins);
    json tj = synth::to_json(t);
    for (auto& [k, v] : tj.items()) v = detail::scaled(c, v.get<double>());
    report["true_metrics"] = std::move(tj);
  }
  report["validation"] = detail::validation_to_json(vrep);
  report["warnings"] = audit.warnings;
  report["config"] = to_json(c);

  {
    std::ostringstream csv;
    write_curve_csv(csv, audit.curve);
    detail::write_text((dir / "curve.csv").string(), csv.str());
  }

  json diagrams = json::object();
  for (const auto& g : c.groups) {
    GroupingDiagram d;
    if (g == "latent") {
      if (!audit.partition) {
        report["warnings"].push_back("latent grouping skipped: no partition was fitted");
        continue;
      }
      // the latent diagram uses the held-out half, like the GL estimate
      const auto split = split_dataset(samples.size(), {acfg.gl_fit_fraction, 0.0, 1.0 - acfg.gl_fit_fraction},
                                       derive_seed(acfg.seed, streams::kAuditSplit));
      const auto eval = select(std::span<const LabeledSample>(samples), std::span<const std::size_t>(split.test));
      d = grouping_diagram(scores_of(eval), labels_of(eval), leaf_groups(*audit.partition, eval), c.n_bins,
                           c.min_group_n);
    } else {
      const bool numeric = std::any_of(samples.begin(), samples.end(), [&](const LabeledSample& s) {
        const auto it = s.features.find(g);
        return it != s.features.end() && std::holds_alternative<std::int64_t>(it->second);
      });
      const auto groups = numeric ? strata_groups(samples, g, c.strata) : feature_groups(samples, g);
      d = grouping_diagram(scores_of(samples), labels_of(samples), groups, c.n_bins, c.min_group_n);
    }
    std::ostringstream csv;
    write_diagram_csv(csv, d);
    detail::write_text((dir / ("diagram_" + detail::safe_name(g) + ".csv")).string(), csv.str());
    diagrams[g] = to_json(d);
  }
  if (!c.groups.empty()) report["diagrams"] = std::move(diagrams);

  detail::write_text((dir / "report.json").string(), report.dump(2) + "\n");
  return kSuccess;
}

/// fit: splits the input by the configured ratios and writes either a global isotonic
/// model or a reconfidencer. Both fit their calibrators on the validation split
/// (train and validation together when pooled).
inline int cmd_fit(const RunConfig& c) {
  if (c.mode != "calibrate" && c.mode != "reconfidence") {
    throw Error(ErrorCode::BadConfig, "mode must be calibrate or reconfidence");
  }
  const auto samples = detail::load_validated(c.input);
  const auto split = detail::make_split(c, samples);
  const auto train = select(std::span<const LabeledSample>(samples), std::span<const std::size_t>(split.train));
  const auto calib = select(std::span<const LabeledSample>(samples), std::span<const std::size_t>(split.validation));

  json model;
  if (c.mode == "calibrate") {
    const auto data = calibration_set(train, calib, c.pooled);
    if (data.empty()) throw Error(ErrorCode::TooFewSamples, "calibration split is empty");
    model = fit_global_calibrator(data).to_json();
  } else {
    const auto r = fit_reconfidencer(train, calib, detail::reconfidencer_config(c));
    for (const auto& w : r.warnings()) std::cerr << "warning: " << w << '\n';
    model = r.to_json();
  }
  model["config"] = to_json(c);
  detail::write_text(c.output, model.dump(2) + "\n");
  return kSuccess;
}

/// apply: rescored rows keep every input field, replace "score" and record "raw_score".
/// Rows the model cannot score become {"id", "error"} and the command exits with 1.
inline int cmd_apply(const RunConfig& c) {
  std::ifstream in(c.model, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + c.model + "'");
  json mj;
  try {
    mj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::FormatError, c.model + ": " + e.what());
  }
  const bool is_reconf = mj.value("type", std::string()) == "reconfidencer";
  std::optional<IsotonicCalibrator> iso;
  std::optional<Reconfidencer> reconf;
  if (is_reconf) {
    reconf = Reconfidencer::from_json(mj);
  } else {
    iso = IsotonicCalibrator::from_json(mj);
  }

  const auto rows = jsonl::read_file(c.input);
  std::vector<json> out;
  out.reserve(rows.size());
  std::size_t failures = 0;
  for (const auto& row : rows) {
    const auto id = row.value("id", std::string());
    try {
      const double raw = std::clamp(row.at("score").get<double>(), 0.0, 1.0);
      double cal = 0.0;
      if (is_reconf) {
        if (!row.contains("embedding")) throw Error(ErrorCode::DimensionMismatch, "missing embedding");
        cal = reconf->reconfidence(raw, row.at("embedding").get<std::vector<double>>());
      } else {
        cal = iso->apply(raw);
      }
      json o = row;
      o["raw_score"] = row.at("score");
      o["score"] = cal;
      out.push_back(std::move(o));
    } catch (const std::exception& e) {
      out.push_back({{"id", id}, {"error", e.what()}});
      ++failures;
    }
  }
  jsonl::write_file(c.output, out);
  if (failures > 0) {
    std::cerr << failures << " rows could not be scored\n";
    return kValidationFailure;
  }
  return kSuccess;
}

/// sweep: one CSV row per method/leaf budget on the test split, plus a JSON mirror at
/// <output>.json carrying the effective config.
inline int cmd_sweep(const RunConfig& c) {
  const auto samples = detail::load_validated(c.input);
  const auto split = detail::make_split(c, samples);
  const std::span<const LabeledSample> all(samples);
  const auto train = select(all, std::span<const std::size_t>(split.train));
  const auto calib = select(all, std::span<const std::size_t>(split.validation));
  const auto test = select(all, std::span<const std::size_t>(split.test));
  const auto rows =
      sweep_partitions(train, calib, test, c.leaf_counts, detail::reconfidencer_config(c), detail::audit_config(c));

  std::ostringstream csv;
  csv << "method,p,brier,cl,gl_lower\n";
  json jrows = json::array();
  for (const auto& r : rows) {
    csv << r.method << ',' << r.p << ',' << format_number(detail::scaled(c, r.brier)) << ','
        << format_number(detail::scaled(c, r.cl)) << ','
        << (r.gl_lower ? format_number(detail::scaled(c, *r.gl_lower)) : std::string()) << '\n';
    json jr = {{"method", r.method}, {"p", r.p}, {"brier", detail::scaled(c, r.brier)}, {"cl", detail::scaled(c, r.cl)}};
    jr["gl_lower"] = r.gl_lower ? json(detail::scaled(c, *r.gl_lower)) : json(nullptr);
    jrows.push_back(std::move(jr));
  }
  detail::write_text(c.output, csv.str());
  const json mirror = {{"rows", std::move(jrows)},
                       {"scaled_by_100", c.scale_by_100},
                       {"split", {{"train", train.size()}, {"validation", calib.size()}, {"test", test.size()}}},
                       {"config", to_json(c)}};
  detail::write_text(c.output + ".json", mirror.dump(2) + "\n");
  return kSuccess;
}

/// synth: generates labeled records with known posteriors from an oracle config.
inline int cmd_synth(const RunConfig& c) {
  auto cfg = synth::config_from_json(config::load_file(c.oracle));
  if (c.synth_n) cfg.n = *c.synth_n;
  if (c.seed_given) cfg.seed = c.seed;
  jsonl::write_samples(c.output, synth::generate(cfg));
  return kSuccess;
}

/// Runs one subcommand and maps failures onto the exit-code contract:
/// 0 success, 1 validation failure, 2 I/O failure.
inline int run(const RunConfig& c) {
  try {
    if (c.command == "score") return cmd_score(c);
    if (c.command == "label") return cmd_label(c);
    if (c.command == "audit") return cmd_audit(c);
    if (c.command == "fit") return cmd_fit(c);
    if (c.command == "apply") return cmd_apply(c);
    if (c.command == "sweep") return cmd_sweep(c);
    if (c.command == "synth") return cmd_synth(c);
    std::cerr << "error: unknown command '" << c.command << "'\n";
    return kValidationFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? kIoFailure : kValidationFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

}  // namespace groupcal::cli
