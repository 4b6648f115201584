#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groupcal/cli/commands.hpp"

namespace {

groupcal::SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() != 3) throw groupcal::Error(groupcal::ErrorCode::BadRatios, "--ratios expects a:b:c");
  return {parts[0], parts[1], parts[2]};
}

void add_model_options(CLI::App* sub, groupcal::cli::RunConfig& cfg, std::string& ratios) {
  sub->add_option("--max-leaves", cfg.max_leaves, "Leaf budget of the partition tree")->capture_default_str();
  sub->add_option("--min-leaf", cfg.min_leaf, "Minimum training samples per leaf")->capture_default_str();
  sub->add_option("--min-leaf-fit", cfg.min_leaf_fit, "Minimum calibration samples for a per-leaf calibrator")
      ->capture_default_str();
  sub->add_option("--ratios", ratios, "train:validation:test split ratios")->capture_default_str();
  sub->add_flag("--stratify", cfg.stratify, "Split each relation separately");
  sub->add_flag("--pooled", cfg.pooled, "Grow the tree and fit calibrators on train+validation together");
  sub->add_flag("--append-score", cfg.append_score, "Use the confidence score as an extra tree feature");
}

void add_metric_options(CLI::App* sub, groupcal::cli::RunConfig& cfg) {
  sub->add_option("--bins", cfg.n_bins, "Number of quantile bins")->capture_default_str();
  sub->add_flag("--debias", cfg.debias_cl, "Use the debiased calibration-loss estimator");
  sub->add_flag("!--no-gl-debias", cfg.debias_gl, "Disable sampling-noise debiasing of the grouping loss");
  sub->add_flag("!--raw", cfg.scale_by_100, "Report raw metrics instead of x100");
}

}  // namespace

int main(int argc, char** argv) {
  groupcal::cli::RunConfig cfg;
  std::string ratios = "0.25:0.25:0.5";

  CLI::App app{"groupcal: calibration and grouping-loss auditing with latent-group reconfidencing"};
  app.set_config("--config", "", "Config file with option defaults (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", cfg.seed, "Root seed for every random choice")->capture_default_str();

  auto* score = app.add_subcommand("score", "Compute confidence scores from NLI consistency or verbalized responses");
  score->add_option("-i,--input", cfg.input, "Consistency or verbalized-response JSONL")->required();
  score->add_option("-o,--output", cfg.output, "Scores JSONL")->required();
  score->add_option("--aggregation", cfg.aggregation, "Sentence aggregation: mean or min")->capture_default_str();
  score->add_option("--n-guesses", cfg.n_guesses, "Keep at most this many guesses (0 = all)");

  auto* label = app.add_subcommand("label", "Label answers by entailment against ground-truth objects");
  label->add_option("-i,--input", cfg.input, "Answers JSONL")->required();
  label->add_option("-o,--output", cfg.output, "Labeled JSONL")->required();
  label->add_option("--truth", cfg.truth, "Ground-truth JSONL {id, objects, premise_template?}");
  label->add_option("--replay", cfg.replay, "Verdict replay JSONL");
  label->add_option("--nli-url", cfg.nli_url, "Live NLI judge base URL");
  label->add_option("--nli-path", cfg.nli_path, "Live NLI judge endpoint path")->capture_default_str();
  label->add_option("--timeout", cfg.nli_timeout, "Live judge timeout in seconds")->capture_default_str();
  label->add_option("--unlabeled", cfg.unlabeled, "Write unlabeled ids here (default: stderr)");
  label->add_option("--sample-for-audit", cfg.sample_for_audit, "Emit k random labeled pairs for manual review");
  label->add_option("--audit-output", cfg.audit_output, "Where to write the audit sample");

  auto* audit = app.add_subcommand("audit", "Brier / CL / GL report with calibration curve and grouping diagrams");
  audit->add_option("-i,--input", cfg.input, "Labeled JSONL")->required();
  audit->add_option("-o,--output", cfg.output, "Output directory")->required();
  audit->add_option("--group", cfg.groups, "Grouping for diagrams: a feature name or 'latent' (repeatable)");
  audit->add_option("--strata", cfg.strata, "Equal-count strata for numeric features")->capture_default_str();
  audit->add_option("--min-group-n", cfg.min_group_n, "Plot floor for group points")->capture_default_str();
  audit->add_option("--max-leaves", cfg.max_leaves, "Leaf budget of the GL partition")->capture_default_str();
  audit->add_option("--min-leaf", cfg.min_leaf, "Minimum samples per GL partition leaf")->capture_default_str();
  audit->add_flag("--append-score", cfg.append_score, "Use the confidence score as an extra tree feature");
  add_metric_options(audit, cfg);

  auto* fit = app.add_subcommand("fit", "Fit a global calibrator or a reconfidencer");
  fit->add_option("-i,--input", cfg.input, "Labeled JSONL")->required();
  fit->add_option("-o,--output", cfg.output, "Model JSON")->required();
  fit->add_option("--mode", cfg.mode, "calibrate or reconfidence")->capture_default_str();
  add_model_options(fit, cfg, ratios);

  auto* apply = app.add_subcommand("apply", "Apply a fitted model to scores");
  apply->add_option("-m,--model", cfg.model, "Model JSON")->required();
  apply->add_option("-i,--input", cfg.input, "Scores JSONL")->required();
  apply->add_option("-o,--output", cfg.output, "Recalibrated JSONL")->required();

  auto* sweep = app.add_subcommand("sweep", "Compare calibration and reconfidencing across leaf budgets");
  sweep->add_option("-i,--input", cfg.input, "Labeled JSONL")->required();
  sweep->add_option("-o,--output", cfg.output, "Table CSV")->required();
  sweep->add_option("--leaves", cfg.leaf_counts, "Leaf budgets")->delimiter(',')->capture_default_str();
  add_model_options(sweep, cfg, ratios);
  add_metric_options(sweep, cfg);

  auto* synth = app.add_subcommand("synth", "Generate synthetic data with known posteriors");
  synth->add_option("oracle", cfg.oracle, "Oracle config (TOML subset or JSON)")->required();
  synth->add_option("-o,--output", cfg.output, "Synthetic JSONL")->required();
  synth->add_option("-n", cfg.synth_n, "Override the number of samples");

  try {
    app.parse(argc, argv);
    cfg.ratios = parse_ratios(ratios);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : groupcal::cli::kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return groupcal::cli::kValidationFailure;
  }
  cfg.seed_given = app.count("--seed") > 0;
  cfg.command = app.get_subcommands().front()->get_name();
  return groupcal::cli::run(cfg);
}
