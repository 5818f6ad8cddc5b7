// Command-line front end for the suspicious-pattern detection pipeline.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "txtopo/errors.hpp"
#include "txtopo/pipeline.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> rho;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

txtopo::PipelineConfig resolve_config(const CommonOptions& opts) {
  txtopo::PipelineConfig cfg = opts.config_path.empty()
                                   ? txtopo::PipelineConfig{}
                                   : txtopo::load_pipeline_config(opts.config_path);
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  if (opts.rho) cfg.rho = *opts.rho;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "pipeline config file (json)");
  cmd->add_option("--out", opts.out_dir, "output directory override");
  cmd->add_option("--rho", opts.rho, "snapshot duration, e.g. 7d or 24h");
  cmd->add_option("--seed", opts.seed, "master seed override");
  cmd->add_option("--jobs", opts.jobs, "parallel worker cap");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transactional-graph pattern detection pipeline"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string from_stage;
  bool dry_run = false;
  std::string train_variant, train_pattern, models_dir;

  for (const std::string& stage : txtopo::kStageOrder) {
    CLI::App* cmd = app.add_subcommand(stage, "run the '" + stage + "' stage");
    add_common(cmd, opts);
    if (stage == "train") {
      cmd->add_option("--variant", train_variant, "train a single variant (gcn|sage|gat)");
      cmd->add_option("--pattern", train_pattern, "train a single pattern");
    }
    if (stage == "evaluate") {
      cmd->add_option("--models", models_dir, "load models from this directory");
    }
  }
  CLI::App* run_all_cmd = app.add_subcommand("run-all", "run every stage in order");
  add_common(run_all_cmd, opts);
  run_all_cmd->add_option("--from", from_stage, "resume at this stage");
  run_all_cmd->add_flag("--dry-run", dry_run, "print the planned stages without writing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    txtopo::PipelineConfig cfg = resolve_config(opts);
    if (run_all_cmd->parsed()) {
      txtopo::RunAllOptions ra;
      if (!from_stage.empty()) ra.from = from_stage;
      ra.dry_run = dry_run;
      const auto plan = txtopo::run_all(cfg, ra);
      if (dry_run) {
        for (const std::string& stage : plan) std::puts(stage.c_str());
      }
      return 0;
    }
    for (const std::string& stage : txtopo::kStageOrder) {
      CLI::App* cmd = app.get_subcommand(stage);
      if (!cmd->parsed()) continue;
      if (stage == "train") {
        if (!train_variant.empty()) cfg.variants = {train_variant};
        if (!train_pattern.empty()) {
          if (!txtopo::pattern_from_name(train_pattern)) {
            std::fprintf(stderr, "unknown pattern: %s\n", train_pattern.c_str());
            return 1;
          }
          cfg.patterns = {train_pattern};
        }
      }
      if (stage == "evaluate" && !models_dir.empty()) cfg.models_dir = models_dir;
      txtopo::run_stage(stage, cfg);
      return 0;
    }
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const txtopo::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const txtopo::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
