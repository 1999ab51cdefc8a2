#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cvsdi/errors.hpp"
#include "cvsdi/sweep.hpp"

namespace cvsdi {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* kCollectiveCols[] = {"mutual_info", "s_ab", "s_a_given_b", "holevo",
                                 "key_rate_unclamped"};
const char* kCoherentCols[] = {"overlap_term", "gamma_term", "mu",        "nu",
                               "sigma_star_sq", "xi_stat",    "big_gamma", "eps_tilde",
                               "eps_smooth_bound", "d0",      "h_xb",      "i_xab",
                               "leak_ec",       "ell_low"};
const char* kMcCols[] = {"d_pe", "v_d_pe", "v_xa_pe", "v_xb_pe", "t_q_hat", "h_emp", "i_emp",
                         "pre_sift_rounds"};

std::vector<double> collective_values(const KeyRateResult& r) {
  const CollectiveRateBreakdown& c = r.collective;
  return {c.mutual_info, c.s_ab, c.s_a_given_b, c.holevo, c.key_rate_unclamped};
}

std::vector<double> coherent_values(const KeyRateResult& r) {
  const CoherentRateBreakdown& c = r.coherent;
  return {c.overlap_term, c.gamma_term, c.mu, c.nu, c.sigma_star_sq, c.xi_stat, c.big_gamma,
          c.eps_tilde, c.eps_smooth_bound, c.d0, c.h_xb, c.i_xab, c.leak_ec, c.ell_low};
}

std::vector<double> mc_values(const KeyRateResult& r) {
  const McRunResult& m = r.mc;
  return {m.pe.d_pe, m.pe.v_d_pe, m.pe.v_xa_pe, m.pe.v_xb_pe, m.t_q_hat, m.h_emp, m.i_emp,
          static_cast<double>(m.pre_sift_rounds)};
}

std::vector<std::string> breakdown_columns(RunMode mode) {
  std::vector<std::string> cols;
  if (mode == RunMode::kCollective) {
    cols.assign(std::begin(kCollectiveCols), std::end(kCollectiveCols));
    return cols;
  }
  cols.assign(std::begin(kCoherentCols), std::end(kCoherentCols));
  if (mode == RunMode::kMc) {
    cols.insert(cols.end(), std::begin(kMcCols), std::end(kMcCols));
  }
  return cols;
}

std::vector<double> breakdown_values(RunMode mode, const KeyRateResult& r) {
  if (mode == RunMode::kCollective) return collective_values(r);
  std::vector<double> vals = coherent_values(r);
  if (mode == RunMode::kMc) {
    const std::vector<double> extra = mc_values(r);
    vals.insert(vals.end(), extra.begin(), extra.end());
  }
  return vals;
}

nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string emit_csv(const RunOutput& out) {
  std::ostringstream os;
  os << "axis,key_rate_bits_per_use,plob,abort_reason";
  for (const std::string& col : breakdown_columns(out.mode)) os << ',' << col;
  os << '\n';
  for (const KeyRateResult& r : out.results) {
    os << fmt(r.axis) << ',' << fmt(r.key_rate) << ',' << fmt(r.plob) << ',' << r.abort_reason;
    for (double v : breakdown_values(out.mode, r)) os << ',' << fmt(v);
    os << '\n';
  }
  return os.str();
}

std::string emit_json(const RunOutput& out) {
  nlohmann::ordered_json doc;
  doc["mode"] = to_string(out.mode);
  doc["axis_name"] = out.axis_name;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  const std::vector<std::string> cols = breakdown_columns(out.mode);
  for (const KeyRateResult& r : out.results) {
    nlohmann::ordered_json row;
    row["axis"] = json_number(r.axis);
    row["key_rate_bits_per_use"] = json_number(r.key_rate);
    row["plob"] = json_number(r.plob);
    row["abort_reason"] = r.abort_reason;
    const std::vector<double> vals = breakdown_values(out.mode, r);
    for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = json_number(vals[i]);
    rows.push_back(std::move(row));
  }
  doc["results"] = std::move(rows);
  return doc.dump(2) + "\n";
}

namespace {

struct ChartScale {
  double x0, x1;           // axis range
  double ly0, ly1;         // log10 rate range
  double px(double x) const { return 70.0 + (x - x0) / (x1 - x0) * 690.0; }
  double py(double rate) const {
    const double l = std::log10(rate);
    return 470.0 - (l - ly0) / (ly1 - ly0) * 430.0;
  }
};

void append_polyline(std::ostringstream& os, const std::vector<std::pair<double, double>>& pts,
                     const ChartScale& s, const char* style) {
  if (pts.size() < 2) return;
  os << "  <polyline fill=\"none\" " << style << " points=\"";
  for (const auto& [x, y] : pts) os << s.px(x) << ',' << s.py(y) << ' ';
  os << "\"/>\n";
}

}  // namespace

std::string emit_svg(const RunOutput& out) {
  double x0 = 0.0, x1 = 1.0;
  double rate_min = 0.0, rate_max = 0.0;
  bool any_rate = false;
  if (!out.results.empty()) {
    x0 = out.results.front().axis;
    x1 = out.results.back().axis;
    if (x0 == x1) x1 = x0 + 1.0;
  }
  for (const KeyRateResult& r : out.results) {
    if (r.key_rate > 0.0) {
      if (!any_rate) {
        rate_min = rate_max = r.key_rate;
        any_rate = true;
      }
      rate_min = std::min(rate_min, r.key_rate);
      rate_max = std::max(rate_max, r.key_rate);
    }
    if (std::isfinite(r.plob) && r.plob > 0.0) {
      if (!any_rate) {
        rate_min = rate_max = r.plob;
        any_rate = true;
      }
      rate_max = std::max(rate_max, r.plob);
    }
  }
  if (!any_rate) {
    rate_min = 1e-6;
    rate_max = 1.0;
  }

  ChartScale s;
  s.x0 = x0;
  s.x1 = x1;
  s.ly0 = std::floor(std::log10(rate_min));
  s.ly1 = std::ceil(std::log10(rate_max));
  if (s.ly1 <= s.ly0) s.ly1 = s.ly0 + 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"520\" "
        "viewBox=\"0 0 800 520\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"520\" fill=\"white\"/>\n";
  os << "  <rect x=\"70\" y=\"40\" width=\"690\" height=\"430\" fill=\"none\" "
        "stroke=\"black\"/>\n";

  // Decade gridlines and labels on the log-scaled rate axis.
  for (double ly = s.ly0; ly <= s.ly1 + 1e-9; ly += 1.0) {
    const double y = 470.0 - (ly - s.ly0) / (s.ly1 - s.ly0) * 430.0;
    os << "  <line x1=\"70\" y1=\"" << y << "\" x2=\"760\" y2=\"" << y
       << "\" stroke=\"#dddddd\"/>\n";
    os << "  <text x=\"64\" y=\"" << y + 4 << "\" font-size=\"12\" text-anchor=\"end\">1e"
       << static_cast<int>(ly) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = x0 + (x1 - x0) * i / 5.0;
    os << "  <text x=\"" << s.px(x) << "\" y=\"492\" font-size=\"12\" text-anchor=\"middle\">"
       << x << "</text>\n";
  }
  os << "  <text x=\"415\" y=\"512\" font-size=\"13\" text-anchor=\"middle\">" << out.axis_name
     << "</text>\n";
  os << "  <text x=\"18\" y=\"255\" font-size=\"13\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 18 255)\">key rate (bits/use)</text>\n";

  // Rate curve: broken wherever the rate drops to zero or a point aborts.
  std::vector<std::pair<double, double>> segment;
  std::vector<std::pair<double, double>> plob_pts;
  for (const KeyRateResult& r : out.results) {
    if (r.key_rate > 0.0) {
      segment.emplace_back(r.axis, r.key_rate);
    } else {
      append_polyline(os, segment, s, "stroke=\"#c62828\" stroke-width=\"1.8\"");
      segment.clear();
    }
    if (std::isfinite(r.plob) && r.plob > 0.0) plob_pts.emplace_back(r.axis, r.plob);
  }
  append_polyline(os, segment, s, "stroke=\"#c62828\" stroke-width=\"1.8\"");
  append_polyline(os, plob_pts, s, "stroke=\"#9e9e9e\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\"");

  os << "  <text x=\"415\" y=\"28\" font-size=\"14\" text-anchor=\"middle\">" << to_string(out.mode)
     << " key rate</text>\n";
  os << "</svg>\n";
  return os.str();
}

void emit_to_configured_output(const RunConfig& config, const RunOutput& out) {
  std::string rendered;
  if (config.format == "csv") {
    rendered = emit_csv(out);
  } else if (config.format == "json") {
    rendered = emit_json(out);
  } else if (config.format == "svg") {
    rendered = emit_svg(out);
  } else {
    throw ConfigError("format must be csv | json | svg");
  }

  if (config.output.empty()) {
    std::cout << rendered;
    return;
  }
  std::ofstream file(config.output, std::ios::binary);
  if (!file) throw IoError("cannot open output file: " + config.output);
  file << rendered;
  if (!file) throw IoError("failed while writing: " + config.output);
}

}  // namespace cvsdi
