#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvsdi/errors.hpp"
#include "cvsdi/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;
constexpr int kExitIo = 4;

struct CliOverrides {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output;
  std::string format;
  // sweep subcommand
  std::string param;
  double from = 0.0, to = 0.0;
  int steps = 1;
  bool log_scale = false;
};

int execute(const CliOverrides& cli, bool with_sweep) {
  cvsdi::RunConfig config = cvsdi::parse_config_file(cli.config_path);
  cvsdi::apply_env_overrides(config);
  if (cli.seed_set) config.seed = cli.seed;
  if (!cli.output.empty()) config.output = cli.output;
  if (!cli.format.empty()) config.format = cli.format;
  if (with_sweep) {
    cvsdi::SweepAxis axis;
    axis.param = cli.param;
    axis.from = cli.from;
    axis.to = cli.to;
    axis.steps = cli.steps;
    axis.log_scale = cli.log_scale;
    config.sweep = axis;
  }
  config.validate();

  const cvsdi::RunOutput out = cvsdi::run(config);
  cvsdi::emit_to_configured_output(config, out);
  if (out.all_aborted()) {
    std::cerr << "cvsdi: every sweep point aborted ("
              << out.results.front().abort_reason << ", ...)\n";
    return kExitModel;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key-rate calculator and Monte-Carlo simulator for entanglement-in-the-middle "
               "CV-QKD"};
  app.require_subcommand(1);

  CliOverrides cli;

  CLI::App* cmd_run = app.add_subcommand("run", "Evaluate the configured run");
  cmd_run->add_option("--config", cli.config_path, "Flat key-value config file")->required();
  cmd_run->add_option("--seed", cli.seed, "Override the RNG seed")
      ->each([&cli](const std::string&) { cli.seed_set = true; });
  cmd_run->add_option("--output", cli.output, "Output path (default: stdout)");
  cmd_run->add_option("--format", cli.format, "csv | json | svg");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Evaluate over a parameter axis");
  cmd_sweep->add_option("--config", cli.config_path, "Flat key-value config file")->required();
  cmd_sweep->add_option("--param", cli.param, "Swept parameter name")->required();
  cmd_sweep->add_option("--from", cli.from, "Axis start")->required();
  cmd_sweep->add_option("--to", cli.to, "Axis end")->required();
  cmd_sweep->add_option("--steps", cli.steps, "Number of points")->required();
  cmd_sweep->add_flag("--log", cli.log_scale, "Log-spaced axis");
  cmd_sweep->add_option("--seed", cli.seed, "Override the RNG seed")
      ->each([&cli](const std::string&) { cli.seed_set = true; });
  cmd_sweep->add_option("--output", cli.output, "Output path (default: stdout)");
  cmd_sweep->add_option("--format", cli.format, "csv | json | svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return execute(cli, app.got_subcommand(cmd_sweep));
  } catch (const cvsdi::ConfigError& e) {
    std::cerr << "cvsdi: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const cvsdi::IoError& e) {
    std::cerr << "cvsdi: io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const cvsdi::ModelError& e) {
    std::cerr << "cvsdi: model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "cvsdi: error: " << e.what() << '\n';
    return kExitModel;
  }
}
