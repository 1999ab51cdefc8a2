#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cvsdi/errors.hpp"
#include "cvsdi/sweep.hpp"

extern char** environ;

namespace cvsdi {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kCollective: return "collective";
    case RunMode::kCoherent: return "coherent";
    case RunMode::kCoherentAsymptotic: return "coherent-asymptotic";
    case RunMode::kMc: return "mc";
  }
  return "?";
}

RunMode parse_run_mode(const std::string& text) {
  if (text == "collective") return RunMode::kCollective;
  if (text == "coherent") return RunMode::kCoherent;
  if (text == "coherent-asymptotic") return RunMode::kCoherentAsymptotic;
  if (text == "mc") return RunMode::kMc;
  throw ConfigError("unknown mode '" + text +
                    "' (expected collective | coherent | coherent-asymptotic | mc)");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number '" + value + "'");
  }
  if (used != value.size()) {
    throw ConfigError("key '" + key + "': trailing junk in number '" + value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (!(v >= 0.0) || v > 1.8e19 || std::abs(v - std::round(v)) > 1e-6 * std::max(1.0, v)) {
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + value + "'");
  }
  return static_cast<std::uint64_t>(std::llround(v) < 0 ? 0 : v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + value + "'");
}

struct SweepScratch {
  bool any = false;
  std::string param;
  double from = 0.0, to = 0.0;
  int steps = 1;
  bool log_scale = false;
  bool have_param = false, have_from = false, have_to = false, have_steps = false;
};

using KeySetter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, KeySetter>& key_setters() {
  static const std::map<std::string, KeySetter> setters = {
      {"mode", [](RunConfig& c, const std::string&, const std::string& v) { c.mode = parse_run_mode(v); }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"output", [](RunConfig& c, const std::string&, const std::string& v) { c.output = v; }},
      {"format",
       [](RunConfig& c, const std::string&, const std::string& v) {
         if (v != "csv" && v != "json" && v != "svg") {
           throw ConfigError("format must be csv | json | svg, got '" + v + "'");
         }
         c.format = v;
       }},
      {"dump_rounds", [](RunConfig& c, const std::string&, const std::string& v) { c.dump_rounds = v; }},
      {"distance_km",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.distance_km = parse_double(k, v);
         if (c.distance_km < 0.0) throw ConfigError("distance_km must be >= 0");
       }},
      {"epr_variance", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.epr_variance = parse_double(k, v); }},
      {"tau_a", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.tau_a = parse_double(k, v); }},
      {"tau_b", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.tau_b = parse_double(k, v); }},
      {"omega_a", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.omega_a = parse_double(k, v); }},
      {"omega_b", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.omega_b = parse_double(k, v); }},
      {"g", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.g = parse_double(k, v); }},
      {"g_prime", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.g_prime = parse_double(k, v); }},
      {"excess_noise", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.excess_noise = parse_double(k, v); }},
      {"beta", [](RunConfig& c, const std::string& k, const std::string& v) { c.params.beta = parse_double(k, v); }},
      {"attenuation_db_per_km",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.params.attenuation_db_per_km = parse_double(k, v); }},
      {"attack",
       [](RunConfig& c, const std::string&, const std::string& v) {
         if (v == "optimal") {
           c.attack = AttackMode::kOptimal;
         } else if (v == "explicit") {
           c.attack = AttackMode::kExplicit;
         } else {
           throw ConfigError("attack must be optimal | explicit, got '" + v + "'");
         }
         c.model.attack = c.attack;
       }},
      {"n_total", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.n_total = parse_u64(k, v); }},
      {"m_pe",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fs.m_pe = parse_u64(k, v);
         c.m_pe_explicit = true;
       }},
      {"alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.alpha = parse_double(k, v); }},
      {"delta", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.delta = parse_double(k, v); }},
      {"m_th", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.m_th = parse_double(k, v); }},
      {"t_split", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.t_split = parse_double(k, v); }},
      {"eps_s", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.eps_s = parse_double(k, v); }},
      {"eps_c", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.eps_c = parse_double(k, v); }},
      {"eps_1",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fs.eps_1 = parse_double(k, v);
         c.eps_1_explicit = true;
       }},
      {"d0",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.fs.d0 = (v == "auto") ? -1.0 : parse_double(k, v);
       }},
      {"p_pass", [](RunConfig& c, const std::string& k, const std::string& v) { c.fs.p_pass = parse_double(k, v); }},
      {"d0_safety", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.d0_safety = parse_double(k, v); }},
      {"tap_in_model", [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tap_in_model = parse_bool(k, v); }},
      {"entropy_model",
       [](RunConfig& c, const std::string&, const std::string& v) {
         if (v == "ideal") {
           c.model.entropy_model = EntropyModel::kIdeal;
         } else if (v == "quantized") {
           c.model.entropy_model = EntropyModel::kQuantized;
         } else {
           throw ConfigError("entropy_model must be ideal | quantized, got '" + v + "'");
         }
       }},
      {"energy_test", [](RunConfig& c, const std::string& k, const std::string& v) { c.energy_test_enabled = parse_bool(k, v); }},
  };
  return setters;
}

// Sweep axis setters reuse the flat-key machinery through numeric rendering.
const std::vector<std::string>& sweepable() {
  static const std::vector<std::string> names = {
      "distance_km", "epr_variance", "tau_a", "tau_b", "omega_a", "omega_b", "g",
      "excess_noise", "beta", "attenuation_db_per_km", "n_total", "m_pe", "alpha",
      "delta", "m_th", "t_split", "eps_s", "eps_c", "eps_1", "d0", "p_pass", "d0_safety"};
  return names;
}

}  // namespace

const std::vector<std::string>& sweepable_parameters() { return sweepable(); }

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig config;
  SweepScratch sweep;
  std::map<std::string, int> seen;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool in_sweep = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(line_no);

    if (stripped.front() == '[') {
      if (stripped == "[sweep]") {
        if (sweep.any) throw ConfigError(where + ": duplicate [sweep] section");
        in_sweep = true;
        sweep.any = true;
        continue;
      }
      throw ConfigError(where + ": unknown section '" + stripped + "'");
    }

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(where + ": empty key or value");
    }

    if (in_sweep) {
      if (++seen["sweep." + key] > 1) throw ConfigError(where + ": duplicate sweep key '" + key + "'");
      if (key == "param") {
        sweep.param = value;
        sweep.have_param = true;
      } else if (key == "from") {
        sweep.from = parse_double(key, value);
        sweep.have_from = true;
      } else if (key == "to") {
        sweep.to = parse_double(key, value);
        sweep.have_to = true;
      } else if (key == "steps") {
        sweep.steps = static_cast<int>(parse_u64(key, value));
        sweep.have_steps = true;
      } else if (key == "scale") {
        if (value == "linear") {
          sweep.log_scale = false;
        } else if (value == "log") {
          sweep.log_scale = true;
        } else {
          throw ConfigError(where + ": scale must be linear | log");
        }
      } else {
        throw ConfigError(where + ": unknown sweep key '" + key + "'");
      }
      continue;
    }

    if (++seen[key] > 1) throw ConfigError(where + ": duplicate key '" + key + "'");
    const auto& setters = key_setters();
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    try {
      it->second(config, key, value);
    } catch (const ConfigError& err) {
      throw ConfigError(where + ": " + err.what());
    }
  }

  if (sweep.any) {
    if (!sweep.have_param || !sweep.have_from || !sweep.have_to) {
      throw ConfigError(origin + ": [sweep] needs param, from and to");
    }
    SweepAxis axis;
    axis.param = sweep.param;
    axis.from = sweep.from;
    axis.to = sweep.to;
    axis.steps = sweep.have_steps ? sweep.steps : 1;
    axis.log_scale = sweep.log_scale;
    config.sweep = axis;
  }
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_env_overrides(RunConfig& config) {
  const std::string prefix = "CVQKD_";
  const auto& setters = key_setters();
  for (char** env = environ; env != nullptr && *env != nullptr; ++env) {
    const char* entry = *env;
    if (std::strncmp(entry, prefix.c_str(), prefix.size()) != 0) continue;
    const char* eq = std::strchr(entry, '=');
    if (eq == nullptr) continue;
    std::string key(entry + prefix.size(), eq - entry - prefix.size());
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    const std::string value = eq + 1;
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("unknown environment override CVQKD_" + key);
    }
    it->second(config, key, value);
  }
}

void RunConfig::validate() const {
  if (format != "csv" && format != "json" && format != "svg") {
    throw ConfigError("format must be csv | json | svg");
  }
  if (sweep.has_value()) {
    const SweepAxis& axis = *sweep;
    if (axis.steps < 1) throw ConfigError("sweep steps must be >= 1");
    if (!(axis.from <= axis.to)) throw ConfigError("sweep bounds must be ordered (from <= to)");
    if (axis.log_scale && !(axis.from > 0.0)) {
      throw ConfigError("log-scaled sweep needs from > 0");
    }
    const auto& names = sweepable();
    if (std::find(names.begin(), names.end(), axis.param) == names.end()) {
      throw ConfigError("unknown sweep parameter '" + axis.param + "'");
    }
    if (!dump_rounds.empty() && axis.steps > 1) {
      throw ConfigError("dump_rounds is only meaningful for single-point runs");
    }
  }
  if (mode != RunMode::kMc && !dump_rounds.empty()) {
    throw ConfigError("dump_rounds requires mode = mc");
  }
}

}  // namespace cvsdi
