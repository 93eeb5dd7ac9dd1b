#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "tsb/experiment.hpp"

namespace {

struct CommonArgs {
  unsigned threads = 0;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool resume = false;

  tsb::RunOptions to_options() const {
    tsb::RunOptions opts;
    opts.threads = threads;
    opts.output_override = output;
    opts.seed_override = seed;
    opts.resume = resume;
    return opts;
  }
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--threads", args.threads, "Cap worker parallelism (0 = hardware)");
  cmd->add_option("--output", args.output, "Override the configured output directory");
  cmd->add_option("--seed", args.seed, "Override the configured master seed");
  cmd->add_flag("--resume", args.resume, "Skip scan rows already completed in the manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample test benchmark harness"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string config_path;
  std::string results_dir;

  CLI::App* cmd_null = app.add_subcommand(
      "null", "Build (or reuse) null distributions and print their thresholds");
  cmd_null->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common_flags(cmd_null, args);

  CLI::App* cmd_scan = app.add_subcommand(
      "scan", "Locate rejected deformation strengths and emit result tables");
  cmd_scan->add_option("config", config_path, "Experiment config (JSON)")->required();
  add_common_flags(cmd_scan, args);

  CLI::App* cmd_report = app.add_subcommand(
      "report", "Emit plot-ready histogram and eCDF series from cached nulls");
  cmd_report->add_option("results_dir", results_dir, "Directory of a previous run")
      ->required();
  add_common_flags(cmd_report, args);

  CLI11_PARSE(app, argc, argv);

  if (cmd_null->parsed()) return tsb::cmd_null(config_path, args.to_options());
  if (cmd_scan->parsed()) return tsb::cmd_scan(config_path, args.to_options());
  return tsb::cmd_report(results_dir, args.to_options());
}
