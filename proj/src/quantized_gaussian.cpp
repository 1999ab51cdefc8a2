#include "cvsdi/quantized_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cvsdi/errors.hpp"

namespace cvsdi {

namespace {

constexpr double kMassCutoff = 1e-18;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

double std_normal_pdf(double x) {
  return 0.39894228040143267794 * std::exp(-0.5 * x * x);
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr int kGl = 16;
constexpr double kGlNode[kGl] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kGlWeight[kGl] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace

AdcGrid::AdcGrid(double alpha_, double delta_) : alpha(alpha_), delta(delta_) {
  if (!(alpha > 0.0) || !(delta > 0.0)) throw ConfigError("ADC grid needs alpha > 0, delta > 0");
  const double ratio = 2.0 * alpha / delta;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 2.0) {
    throw ConfigError("2*alpha/delta must be a positive integer, got " + std::to_string(ratio));
  }
  if (rounded > (1 << 24)) {
    throw ConfigError("ADC grid with " + std::to_string(ratio) + " symbols is unreasonably fine");
  }
  symbols_ = static_cast<int>(rounded);
}

int AdcGrid::discretize(double value) const {
  const int k = static_cast<int>(std::ceil((value + alpha) / delta));
  return std::clamp(k, 1, symbols_);
}

std::vector<double> gaussian_bin_masses(const AdcGrid& grid, double variance) {
  if (!(variance > 0.0)) throw std::domain_error("variance must be positive");
  const int m = grid.symbol_count();
  const double sigma = std::sqrt(variance);
  std::vector<double> masses(static_cast<std::size_t>(m) + 1, 0.0);  // 1-based
  double prev_cdf = 0.0;  // CDF at -infinity
  for (int k = 1; k < m; ++k) {
    const double cdf = std_normal_cdf(grid.lower_edge(k + 1) / sigma);
    masses[static_cast<std::size_t>(k)] = cdf - prev_cdf;
    prev_cdf = cdf;
  }
  masses[static_cast<std::size_t>(m)] = 1.0 - prev_cdf;
  return masses;
}

double expected_second_moment(const AdcGrid& grid, double variance) {
  const auto masses = gaussian_bin_masses(grid, variance);
  const double center = grid.center();
  double sum = 0.0;
  for (int k = 1; k <= grid.symbol_count(); ++k) {
    const double d = k - center;
    sum += d * d * masses[static_cast<std::size_t>(k)];
  }
  return sum;
}

double quantized_entropy(const AdcGrid& grid, double variance) {
  const auto masses = gaussian_bin_masses(grid, variance);
  double h = 0.0;
  for (int k = 1; k <= grid.symbol_count(); ++k) h -= xlog2x(masses[static_cast<std::size_t>(k)]);
  return h;
}

namespace {

// One conditional row of the pair model: distribution of X_A given the
// continuous Bob outcome u, also weighted by Bob's marginal density.
struct PairAccumulator {
  const AdcGrid& grid;
  double slope;    // E[A' - u | U = u] = slope * u
  double s_cond;   // std of A' - u - slope*u
  double sigma_b;  // std of U

  double dist = 0.0;
  double dist_sq = 0.0;
  std::vector<double> row;        // joint masses of the current Bob bin
  std::vector<double> marginal_a; // accumulated X_A marginal (diagnostic)
  double joint_entropy_neg = 0.0; // running  sum of p log2 p over finished rows

  explicit PairAccumulator(const AdcGrid& g, double slope_, double s_, double sb)
      : grid(g), slope(slope_), s_cond(s_), sigma_b(sb) {
    row.assign(static_cast<std::size_t>(grid.symbol_count()) + 1, 0.0);
    marginal_a.assign(static_cast<std::size_t>(grid.symbol_count()) + 1, 0.0);
  }

  // Adds weight * P(X_A = k | U = u) terms for one quadrature node.
  void add_node(double u, int j, double weight) {
    const int m = grid.symbol_count();
    const double q = u + slope * u;
    const double span = 10.0 * s_cond + grid.delta;
    const int kmin = grid.discretize(q - span);
    const int kmax = grid.discretize(q + span);
    double prev = (kmin == 1) ? 0.0 : std_normal_cdf((grid.lower_edge(kmin) - q) / s_cond);
    for (int k = kmin; k <= kmax; ++k) {
      const double cdf =
          (k == m) ? 1.0 : std_normal_cdf((grid.lower_edge(k + 1) - q) / s_cond);
      const double pk = cdf - prev;
      prev = cdf;
      if (pk <= 0.0) continue;
      const double w = weight * pk;
      const double d = std::abs(k - j);
      dist += w * d;
      dist_sq += w * d * d;
      row[static_cast<std::size_t>(k)] += w;
    }
  }

  // Gauss-Legendre panel over [lo, hi] for Bob bin j.
  void add_panel(double lo, double hi, int j) {
    if (!(hi > lo)) return;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < kGl; ++i) {
      const double u = mid + half * kGlNode[i];
      const double w = half * kGlWeight[i] * std_normal_pdf(u / sigma_b) / sigma_b;
      add_node(u, j, w);
    }
  }

  // Deterministic lump: mass of U assigned entirely to X_A = k.
  void add_lump(double mass, int j, int k) {
    if (mass <= 0.0) return;
    row[static_cast<std::size_t>(k)] += mass;
    const double d = std::abs(k - j);
    dist += mass * d;
    dist_sq += mass * d * d;
  }

  void finish_row() {
    for (std::size_t k = 1; k < row.size(); ++k) {
      joint_entropy_neg += xlog2x(row[k]);
      marginal_a[k] += row[k];
      row[k] = 0.0;
    }
  }
};

}  // namespace

QuantizedPairModel quantized_pair_model(const AdcGrid& grid, double var_a, double var_b,
                                        double cov) {
  if (!(var_a > 0.0) || !(var_b > 0.0)) throw std::domain_error("pair variances must be positive");
  if (!(cov * cov < var_a * var_b)) throw std::domain_error("pair covariance not positive definite");

  const int m = grid.symbol_count();
  const double sigma_b = std::sqrt(var_b);
  const double var_w = var_a + var_b - 2.0 * cov;
  const double cov_uw = cov - var_b;
  const double slope = cov_uw / var_b;
  const double var_cond = std::max(var_w - cov_uw * cov_uw / var_b, 1e-30);
  const double s_cond = std::sqrt(var_cond);

  const auto masses_b = gaussian_bin_masses(grid, var_b);
  PairAccumulator acc(grid, slope, s_cond, sigma_b);

  const double span_u = 12.0 * sigma_b;
  const double strip_step = std::max(grid.delta, 4.0 * s_cond);
  // Interior bins are subdivided so each panel resolves the conditional scale.
  const int subdiv = std::clamp(static_cast<int>(std::ceil(grid.delta / (2.0 * s_cond))), 1, 64);

  // u beyond which X_A sticks to the boundary symbol (if it ever does).
  const double one_plus = 1.0 + slope;
  const double detach = 10.0 * s_cond + grid.delta;

  // Spreads a lump of Bob-mass over Alice symbols with the conditional law
  // frozen at the representative point u_rep (used for deep uncorrelated tails).
  const auto spread_lump = [&](double mass, int j, double u_rep) {
    const double q = one_plus * u_rep;
    double prev = 0.0;
    for (int k = 1; k <= m; ++k) {
      const double cdf = (k == m) ? 1.0 : std_normal_cdf((grid.lower_edge(k + 1) - q) / s_cond);
      acc.add_lump(mass * (cdf - prev), j, k);
      prev = cdf;
    }
  };

  // Lower tail bin j = 1: walk panels downward from its upper edge.
  {
    const double edge = grid.lower_edge(2);
    if (masses_b[1] > kMassCutoff) {
      double hi = edge;
      double assigned = std_normal_cdf(edge / sigma_b);  // mass of U <= edge
      bool settled = false;
      while (hi > -span_u) {
        const double lo = std::max(hi - strip_step, -span_u);
        // Once the conditional support can no longer reach past symbol 1,
        // the rest of the tail contributes distance zero.
        if (one_plus > 1e-12 && one_plus * hi + detach < edge) {
          settled = true;
          break;
        }
        acc.add_panel(lo, hi, 1);
        assigned -= std_normal_cdf(hi / sigma_b) - std_normal_cdf(lo / sigma_b);
        hi = lo;
      }
      const double rest = std::max(assigned, 0.0);
      if (settled) {
        acc.add_lump(rest, 1, 1);
      } else if (rest > 0.0) {
        spread_lump(rest, 1, hi);
      }
    } else {
      acc.add_lump(masses_b[1], 1, 1);
    }
    acc.finish_row();
  }

  // Interior bins.
  for (int j = 2; j < m; ++j) {
    const double mass = masses_b[static_cast<std::size_t>(j)];
    if (mass <= kMassCutoff) {
      // Park negligible mass on the diagonal so the joint sums to one.
      acc.add_lump(mass, j, j);
      acc.finish_row();
      continue;
    }
    const double lo = grid.lower_edge(j);
    const double hi = grid.lower_edge(j + 1);
    const double step = (hi - lo) / subdiv;
    for (int i = 0; i < subdiv; ++i) acc.add_panel(lo + i * step, lo + (i + 1) * step, j);
    acc.finish_row();
  }

  // Upper tail bin j = M: mirror of the lower tail.
  {
    const double edge = grid.lower_edge(m);
    if (masses_b[static_cast<std::size_t>(m)] > kMassCutoff) {
      double lo = edge;
      double assigned = 1.0 - std_normal_cdf(edge / sigma_b);
      bool settled = false;
      while (lo < span_u) {
        const double hi = std::min(lo + strip_step, span_u);
        if (one_plus > 1e-12 && one_plus * lo - detach > edge) {
          settled = true;
          break;
        }
        acc.add_panel(lo, hi, m);
        assigned -= std_normal_cdf(hi / sigma_b) - std_normal_cdf(lo / sigma_b);
        lo = hi;
      }
      const double rest = std::max(assigned, 0.0);
      if (settled) {
        acc.add_lump(rest, m, m);
      } else if (rest > 0.0) {
        spread_lump(rest, m, lo);
      }
    } else {
      acc.add_lump(masses_b[static_cast<std::size_t>(m)], m, m);
    }
    acc.finish_row();
  }

  QuantizedPairModel out;
  out.expected_distance = acc.dist;
  out.expected_distance_sq = acc.dist_sq;
  out.second_moment_a = expected_second_moment(grid, var_a);
  out.second_moment_b = expected_second_moment(grid, var_b);
  out.entropy_a = quantized_entropy(grid, var_a);
  out.entropy_b = quantized_entropy(grid, var_b);
  out.joint_entropy = -acc.joint_entropy_neg;
  out.mutual_information =
      std::max(out.entropy_a + out.entropy_b - out.joint_entropy, 0.0);
  return out;
}

}  // namespace cvsdi
