#include <cmath>
#include <functional>
#include <map>

#include "cvsdi/coherent_model.hpp"
#include "cvsdi/errors.hpp"
#include "cvsdi/sweep.hpp"

namespace cvsdi {

namespace {

void apply_sweep_value(RunConfig& config, const std::string& param, double value) {
  auto as_u64 = [&](double v) {
    if (!(v >= 1.0)) throw ConfigError("sweep value for '" + param + "' must be >= 1");
    return static_cast<std::uint64_t>(std::llround(v));
  };
  static const std::map<std::string, std::function<void(RunConfig&, double)>> setters = {
      {"distance_km", [](RunConfig& c, double v) { c.distance_km = v; }},
      {"epr_variance", [](RunConfig& c, double v) { c.params.epr_variance = v; }},
      {"tau_a", [](RunConfig& c, double v) { c.params.tau_a = v; }},
      {"tau_b", [](RunConfig& c, double v) { c.params.tau_b = v; }},
      {"omega_a", [](RunConfig& c, double v) { c.params.omega_a = v; }},
      {"omega_b", [](RunConfig& c, double v) { c.params.omega_b = v; }},
      {"g", [](RunConfig& c, double v) { c.params.g = v; }},
      {"excess_noise", [](RunConfig& c, double v) { c.params.excess_noise = v; }},
      {"beta", [](RunConfig& c, double v) { c.params.beta = v; }},
      {"attenuation_db_per_km", [](RunConfig& c, double v) { c.params.attenuation_db_per_km = v; }},
      {"alpha", [](RunConfig& c, double v) { c.fs.alpha = v; }},
      {"delta", [](RunConfig& c, double v) { c.fs.delta = v; }},
      {"m_th", [](RunConfig& c, double v) { c.fs.m_th = v; }},
      {"t_split", [](RunConfig& c, double v) { c.fs.t_split = v; }},
      {"eps_s", [](RunConfig& c, double v) { c.fs.eps_s = v; }},
      {"eps_c", [](RunConfig& c, double v) { c.fs.eps_c = v; }},
      {"d0", [](RunConfig& c, double v) { c.fs.d0 = v; }},
      {"p_pass", [](RunConfig& c, double v) { c.fs.p_pass = v; }},
      {"d0_safety", [](RunConfig& c, double v) { c.model.d0_safety = v; }},
  };
  if (param == "n_total") {
    config.fs.n_total = as_u64(value);
    return;
  }
  if (param == "m_pe") {
    config.fs.m_pe = as_u64(value);
    config.m_pe_explicit = true;
    return;
  }
  if (param == "eps_1") {
    config.fs.eps_1 = value;
    config.eps_1_explicit = true;
    return;
  }
  const auto it = setters.find(param);
  if (it == setters.end()) throw ConfigError("unknown sweep parameter '" + param + "'");
  it->second(config, value);
}

struct ResolvedPoint {
  ProtocolParams params;
  FiniteSizeParams fs;
};

ResolvedPoint resolve_point(const RunConfig& config) {
  ResolvedPoint out{config.params, config.fs};
  if (config.distance_km >= 0.0) {
    const double t = distance_to_transmissivity(config.distance_km,
                                                config.params.attenuation_db_per_km);
    const double arm = std::sqrt(t);
    out.params.tau_a = arm;
    out.params.tau_b = arm;
  }
  if (!config.m_pe_explicit) out.fs.m_pe = out.fs.n_total / 2;
  if (!config.eps_1_explicit) out.fs.eps_1 = out.fs.eps_s / 2.0;
  return out;
}

KeyRateResult evaluate_point(const RunConfig& config, double axis_value) {
  const ResolvedPoint point = resolve_point(config);
  KeyRateResult result;
  result.axis = axis_value;
  result.plob = plob_bound(point.params.total_transmissivity());

  switch (config.mode) {
    case RunMode::kCollective: {
      result.collective = key_rate_collective(point.params, config.attack);
      result.key_rate = result.collective.key_rate;
      break;
    }
    case RunMode::kCoherent: {
      result.coherent = key_rate_coherent(point.params, point.fs, config.model);
      result.key_rate = result.coherent.key_rate;
      result.abort_reason = result.coherent.abort_reason;
      break;
    }
    case RunMode::kCoherentAsymptotic: {
      result.coherent = key_rate_coherent_asymptotic(point.params, point.fs, config.model);
      result.key_rate = result.coherent.key_rate;
      result.abort_reason = result.coherent.abort_reason;
      break;
    }
    case RunMode::kMc: {
      McRunOptions opts;
      opts.model = config.model;
      opts.energy_test_enabled = config.energy_test_enabled;
      opts.dump_path = config.dump_rounds;
      result.mc = run_protocol(point.params, point.fs, config.seed, opts);
      result.coherent = result.mc.breakdown;
      result.key_rate = result.coherent.key_rate;
      result.abort_reason = result.coherent.abort_reason;
      break;
    }
  }
  return result;
}

}  // namespace

bool RunOutput::all_aborted() const {
  if (results.empty()) return false;
  for (const KeyRateResult& r : results) {
    if (r.abort_reason.empty()) return false;
  }
  return true;
}

RunOutput run(const RunConfig& config) {
  config.validate();
  RunOutput out;
  out.mode = config.mode;

  if (!config.sweep.has_value()) {
    out.axis_name = "distance_km";
    const double axis = config.distance_km >= 0.0 ? config.distance_km : 0.0;
    out.results.push_back(evaluate_point(config, axis));
    return out;
  }

  const SweepAxis& axis = *config.sweep;
  out.axis_name = axis.param;
  out.results.reserve(static_cast<std::size_t>(axis.steps));
  for (int i = 0; i < axis.steps; ++i) {
    double value = axis.from;
    if (axis.steps > 1) {
      const double frac = static_cast<double>(i) / (axis.steps - 1);
      value = axis.log_scale ? axis.from * std::pow(axis.to / axis.from, frac)
                             : axis.from + (axis.to - axis.from) * frac;
    }
    RunConfig point = config;
    point.sweep.reset();
    apply_sweep_value(point, axis.param, value);
    out.results.push_back(evaluate_point(point, value));
  }
  return out;
}

}  // namespace cvsdi
