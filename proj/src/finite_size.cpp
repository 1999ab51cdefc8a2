#include "cvsdi/finite_size.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cvsdi/errors.hpp"
#include "cvsdi/quantized_gaussian.hpp"

namespace cvsdi {

namespace {
constexpr double kTwoPi = 6.283185307179586476925;
constexpr double kInvLn2 = 1.4426950408889634;
}  // namespace

void FiniteSizeParams::validate() const {
  if (n_total < 2 || m_pe == 0 || m_pe >= n_total) {
    throw ConfigError("need 0 < m_pe < n_total");
  }
  AdcGrid grid(alpha, delta);  // checks 2*alpha/delta integral
  (void)grid;
  if (!(delta <= 1.0)) {
    throw ConfigError("delta > 1 invalidates the overlap approximation c = delta^2/(2 pi)");
  }
  if (!(t_split > 0.5 && t_split < 1.0)) throw ConfigError("t_split must lie in (1/2, 1)");
  if (!(m_th > 0.0)) throw ConfigError("m_th must be positive");
  const double mu_geo = std::sqrt((1.0 - t_split) / (2.0 * t_split));
  if (!(mu_geo * alpha > m_th)) {
    throw ConfigError("energy-test bound vacuous for this geometry: need "
                      "sqrt((1-T)/(2T)) * alpha > M_th");
  }
  auto check_eps = [](double e, const char* name) {
    if (!(e > 0.0 && e < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
  };
  check_eps(eps_s, "eps_s");
  check_eps(eps_c, "eps_c");
  check_eps(eps_1, "eps_1");
  if (!(eps_1 < eps_s)) throw ConfigError("eps_1 must be smaller than eps_s");
  if (!(d0 >= 0.0)) {
    throw ConfigError("d0 must be >= 0 (negative means unresolved: derive it from the model)");
  }
  if (!(p_pass > 0.0 && p_pass <= 1.0)) throw ConfigError("p_pass must lie in (0, 1]");
}

double overlap_c(double delta) {
  if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
  if (delta > 1.0) {
    throw ConfigError("delta = " + std::to_string(delta) +
                      " too large for c(delta) ~ delta^2/(2 pi); evaluate the exact "
                      "prolate-spheroidal overlap instead");
  }
  return delta * delta / kTwoPi;
}

double gamma_dev(double t) {
  if (t < 0.0) throw std::domain_error("gamma(t) requires t >= 0");
  if (t == 0.0) return 1.0;
  // log form avoids the 0^0 limit and the cancellation in sqrt(t^2+1) - 1.
  const double root = std::sqrt(t * t + 1.0);
  const double log_gamma = std::asinh(t) + t * std::log((root + 1.0) / t);
  return std::exp(log_gamma);
}

double energy_gamma(double alpha, double t_split, double m_th) {
  if (!(t_split > 0.5 && t_split < 1.0)) throw ConfigError("t_split must lie in (1/2, 1)");
  const double mu = std::sqrt((1.0 - t_split) / (2.0 * t_split));
  if (!(mu * alpha > m_th)) {
    throw ConfigError("energy-test bound vacuous for this geometry");
  }
  const double lambda = (2.0 * t_split - 1.0) / t_split;
  const double lam_sq = lambda * lambda;
  const double prefactor = 0.5 * (std::sqrt(1.0 + lam_sq) + std::sqrt(1.0 + 1.0 / lam_sq));
  const double margin = mu * alpha - m_th;
  return prefactor * std::exp(-margin * margin / (t_split * (1.0 + lam_sq) / 2.0));
}

double energy_smoothness(double n_key, double big_gamma, double p_pass) {
  if (!(n_key > 0.0) || big_gamma < 0.0 || !(p_pass > 0.0)) {
    throw std::domain_error("energy_smoothness needs n > 0, Gamma >= 0, p_pass > 0");
  }
  return std::sqrt(2.0 * n_key * big_gamma / p_pass);
}

double xi_stat(double eps_s, double eps_1, double n_key, double big_gamma, double nu,
               double alpha, double n_total, double m_pe) {
  const double a = eps_s - eps_1 - 2.0 * std::sqrt(2.0 * n_key * big_gamma);
  if (!(a > 0.0)) {
    throw ModelError("security budget exhausted by energy test");
  }
  const double ratio = nu / alpha;
  const double expo =
      -2.0 * ratio * ratio * n_key * m_pe * m_pe / (n_total * (m_pe + 1.0));
  return a * a - 2.0 * std::exp(expo);
}

std::optional<double> find_min_nu(double eps_s, double eps_1, double n_key, double big_gamma,
                                  double alpha, double n_total, double m_pe) {
  const double a = eps_s - eps_1 - 2.0 * std::sqrt(2.0 * n_key * big_gamma);
  if (!(a > 0.0)) return std::nullopt;
  const double a_sq = a * a;
  if (a_sq >= 2.0) return 0.0;
  const double scale = n_total * (m_pe + 1.0) / (2.0 * n_key * m_pe * m_pe);
  return alpha * std::sqrt(scale * std::log(2.0 / a_sq));
}

double sigma_star_sq(const PEStatistics& pe, double n_total, double m_pe, double nu,
                     double delta) {
  if (pe.d_pe < 0.0 || pe.v_d_pe < 0.0 || pe.v_xa_pe < 0.0 || pe.v_xb_pe < 0.0 || nu < 0.0) {
    throw DataError("PE aggregates and nu must be nonnegative");
  }
  const double w = m_pe / n_total;
  const double nu_bins = nu / (delta * delta);
  const double radicand = (pe.v_xa_pe + nu_bins) * (pe.v_xb_pe + nu_bins);
  if (radicand < 0.0) throw DataError("negative radicand in sigma*^2");
  return w * (pe.v_d_pe - w * pe.d_pe * pe.d_pe) +
         w * (pe.v_xa_pe + pe.v_xb_pe + 2.0 * nu_bins) + 2.0 * w * std::sqrt(radicand);
}

double mu_fluctuation(double sigma_star_sq_v, double xi, double n_total, double n_key,
                      double m_pe, double alpha, double delta) {
  if (!(xi > 0.0 && xi < 1.0)) throw std::domain_error("mu_fluctuation requires xi in (0, 1)");
  if (sigma_star_sq_v < 0.0) throw std::domain_error("sigma*^2 must be nonnegative");
  const double log_term = -std::log2(xi);
  const double sigma_star = std::sqrt(sigma_star_sq_v);
  return std::sqrt(2.0 * log_term) * n_total * sigma_star / (m_pe * std::sqrt(n_key)) +
         (4.0 * (alpha / delta) * log_term / 3.0) * n_total / (n_key * m_pe);
}

double discrete_entropy(const std::vector<double>& histogram, double delta) {
  if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
  double sum = 0.0;
  double h = 0.0;
  for (double p : histogram) {
    if (p < 0.0) throw std::domain_error("histogram frequencies must be nonnegative");
    sum += p;
    if (p > 0.0) h -= p * std::log2(p);
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::domain_error("histogram frequencies must sum to 1");
  }
  return h - std::log2(delta);
}

double ec_leakage(double h_b, double mutual_info, double beta, double n_key) {
  if (h_b < 0.0 || mutual_info < 0.0 || !(beta >= 0.0 && beta <= 1.0) || !(n_key > 0.0)) {
    throw std::domain_error("ec_leakage inputs out of range");
  }
  return std::max(n_key * (h_b - beta * mutual_info), 0.0);
}

CoherentRateBreakdown key_length_low(const FiniteSizeParams& fs, const PEStatistics& pe,
                                     double leak_ec, double h_xb, double i_xab) {
  fs.validate();
  const double n = static_cast<double>(fs.n_key());
  const double m = static_cast<double>(fs.m_pe);
  const double n_tot = static_cast<double>(fs.n_total);

  CoherentRateBreakdown out;
  out.d0 = fs.d0;
  out.h_xb = h_xb;
  out.i_xab = i_xab;
  out.leak_ec = leak_ec;
  out.overlap_term = std::log2(1.0 / overlap_c(fs.delta));
  out.big_gamma = energy_gamma(fs.alpha, fs.t_split, fs.m_th);
  out.eps_tilde = energy_smoothness(n, out.big_gamma, fs.p_pass);

  const double denom = 2.0 * fs.p_pass - 2.0 * out.eps_tilde;
  out.eps_smooth_bound =
      denom > 0.0 ? (fs.eps_s - fs.eps_1) / denom : 0.0;

  auto abort = [&](const std::string& reason) {
    out.key_rate = 0.0;
    out.abort_reason = reason;
    return out;
  };

  if (!(denom > 0.0)) return abort("smoothing_budget_nonpositive");
  // Validity as printed (n-free) plus the stricter in-budget form; the
  // stricter one also gates through find_min_nu below.
  if (!(fs.eps_1 - 2.0 * std::sqrt(2.0 * out.big_gamma) < fs.eps_s)) {
    return abort("energy_test_budget_exhausted");
  }
  if (pe.d_pe > fs.d0) return abort("pe_distance_exceeds_threshold");

  const auto nu_min = find_min_nu(fs.eps_s, fs.eps_1, n, out.big_gamma, fs.alpha, n_tot, m);
  if (!nu_min.has_value()) return abort("energy_test_budget_exhausted");

  // The feasibility threshold gives xi = 0+ and hence mu = infinity; sweep a
  // fixed log grid of multipliers above it and keep the mu-minimizing nu.
  double best_mu = std::numeric_limits<double>::infinity();
  double best_nu = 0.0, best_xi = 0.0, best_ssq = 0.0;
  const double nu_base = std::max(*nu_min, 1e-300);
  for (int j = 0; j <= 120; ++j) {
    const double mult = 1.0 + std::pow(10.0, -9.0 + 15.0 * j / 120.0);
    const double nu = (*nu_min == 0.0 && j == 0) ? 0.0 : nu_base * mult;
    const double xi = xi_stat(fs.eps_s, fs.eps_1, n, out.big_gamma, nu, fs.alpha, n_tot, m);
    if (!(xi > 0.0 && xi < 1.0)) continue;
    const double ssq = sigma_star_sq(pe, n_tot, m, nu, fs.delta);
    const double mu = mu_fluctuation(ssq, xi, n_tot, n, m, fs.alpha, fs.delta);
    if (mu < best_mu) {
      best_mu = mu;
      best_nu = nu;
      best_xi = xi;
      best_ssq = ssq;
    }
  }
  if (!std::isfinite(best_mu)) return abort("no_admissible_nu");

  out.nu = best_nu;
  out.xi_stat = best_xi;
  out.sigma_star_sq = best_ssq;
  out.mu = best_mu;
  out.gamma_term = std::log2(gamma_dev(fs.d0 + out.mu));

  const double log_eps = std::log(1.0 / (fs.eps_1 * fs.eps_1 * fs.eps_c)) * kInvLn2;
  out.ell_low = n * (out.overlap_term - out.gamma_term) - leak_ec - log_eps + 2.0;
  out.key_rate = std::max(out.ell_low / n_tot, 0.0);
  return out;
}

}  // namespace cvsdi
