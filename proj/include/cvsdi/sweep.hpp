#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvsdi/collective.hpp"
#include "cvsdi/protocol_mc.hpp"

namespace cvsdi {

enum class RunMode { kCollective, kCoherent, kCoherentAsymptotic, kMc };

std::string to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

struct SweepAxis {
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int steps = 1;
  bool log_scale = false;
};

// Flat key-value configuration; unknown keys are hard errors.
struct RunConfig {
  RunMode mode = RunMode::kCollective;
  double distance_km = -1.0;  // < 0: use tau_a/tau_b as given
  ProtocolParams params;
  FiniteSizeParams fs;
  CoherentModelOptions model;
  AttackMode attack = AttackMode::kOptimal;
  bool energy_test_enabled = true;
  bool m_pe_explicit = false;   // else m_pe = n_total / 2 at each point
  bool eps_1_explicit = false;  // else eps_1 = eps_s / 2
  std::optional<SweepAxis> sweep;
  std::uint64_t seed = 1;
  std::string output;           // empty: stdout
  std::string format = "csv";   // csv | json | svg
  std::string dump_rounds;

  void validate() const;  // throws ConfigError
};

// One evaluated sweep point.
struct KeyRateResult {
  double axis = 0.0;
  double key_rate = 0.0;
  double plob = 0.0;
  std::string abort_reason;
  CollectiveRateBreakdown collective;
  CoherentRateBreakdown coherent;
  McRunResult mc;
};

struct RunOutput {
  RunMode mode = RunMode::kCollective;
  std::string axis_name = "value";
  std::vector<KeyRateResult> results;
  bool all_aborted() const;
};

// Parsers.  parse_config_text reports errors with `origin` and line numbers.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// CVQKD_<UPPER_KEY> environment overrides; unknown CVQKD_ names are errors.
void apply_env_overrides(RunConfig& config);

// Names accepted as sweep parameters.
const std::vector<std::string>& sweepable_parameters();

// Evaluates all sweep points in deterministic order.
RunOutput run(const RunConfig& config);

// Emitters (pure: string outputs).  Numbers use full double precision.
std::string emit_csv(const RunOutput& out);
std::string emit_json(const RunOutput& out);
std::string emit_svg(const RunOutput& out);

// Renders `format` and writes to config.output (stdout when empty).
void emit_to_configured_output(const RunConfig& config, const RunOutput& out);

}  // namespace cvsdi
