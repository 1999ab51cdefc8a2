#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cvsdi {

// Block-size and security parameters of one coherent-attack evaluation.
// Counts are the *sifted* totals: n key signals plus m estimation signals.
struct FiniteSizeParams {
  std::uint64_t n_total = 10'000'000'000ULL;  // N = n + m
  std::uint64_t m_pe = 5'000'000'000ULL;      // parameter-estimation signals
  double alpha = 52.0;        // ADC range, quadrature units
  double delta = 1.0;         // ADC resolution, 2*alpha/delta must be integral
  double m_th = 12.0;         // energy-test threshold
  double t_split = 0.7;       // energy-test beam-splitter transmissivity
  double eps_s = 0.5e-20;     // secrecy parameter
  double eps_c = 0.5e-20;     // correctness parameter
  double eps_1 = 0.25e-20;    // smoothing split, < eps_s
  double d0 = -1.0;           // PE distance threshold, bin units; negative:
                              // resolve from the honest model (d0_safety * E[d])
  double p_pass = 0.99;       // lower bound on the PE pass probability

  std::uint64_t n_key() const { return n_total - m_pe; }
  void validate() const;  // throws ConfigError
};

// Empirical (or model-expected) parameter-estimation aggregates in bin units.
struct PEStatistics {
  double d_pe = 0.0;        // average |X_A - X_B|
  double v_d_pe = 0.0;      // average |X_A - X_B|^2
  double v_xa_pe = 0.0;     // average |X_A - alpha/delta|^2
  double v_xb_pe = 0.0;     // average |X_B - alpha/delta|^2
  double p_pass_emp = 1.0;  // empirical PE/energy-test pass rate
  double t_q_hat = 1.0;     // estimated rescaling factor
};

// Full diagnostic trail of one key-length evaluation.
struct CoherentRateBreakdown {
  double overlap_term = 0.0;   // log2(1/c(delta)), bits/symbol
  double gamma_term = 0.0;     // log2 gamma(d0 + mu), bits/symbol
  double mu = 0.0;             // statistical fluctuation, bin units
  double nu = 0.0;             // second-moment confidence radius
  double sigma_star_sq = 0.0;  // bin^2 units
  double xi_stat = 0.0;        // Serfling failure budget
  double big_gamma = 0.0;      // energy-test bound Gamma
  double eps_tilde = 0.0;      // energy-test smoothness
  double eps_smooth_bound = 0.0;  // admissible smoothing parameter (validity flag)
  double d0 = 0.0;
  double h_xb = 0.0;           // H(X_B) entering l_EC, bits/symbol
  double i_xab = 0.0;          // I(X_B:X_A) entering l_EC, bits/symbol
  double leak_ec = 0.0;        // l_EC, bits (total)
  double ell_low = 0.0;        // lower bound on the key length, bits (signed)
  double key_rate = 0.0;       // max{ell_low / N, 0}, bits per channel use
  std::string abort_reason;    // empty unless a validity check failed
};

// Measurement-overlap approximation c(delta) = delta^2 / (2 pi), valid for
// delta <= 1 (enforced).
double overlap_c(double delta);

// Large-deviation exponent gamma(t) = (t + sqrt(t^2+1)) (t/(sqrt(t^2+1)-1))^t.
double gamma_dev(double t);

// Energy-test bound Gamma(alpha, T, M_th); requires 1/2 < T < 1 and
// mu*alpha > M_th with mu = sqrt((1-T)/(2T)).
double energy_gamma(double alpha, double t_split, double m_th);

// Smoothness of the energy test: sqrt(2 n Gamma / p_pass).
double energy_smoothness(double n_key, double big_gamma, double p_pass);

// Serfling budget xi at deviation radius nu.
double xi_stat(double eps_s, double eps_1, double n_key, double big_gamma, double nu,
               double alpha, double n_total, double m_pe);

// Smallest nu with xi(nu) > 0 (closed form); nullopt when the energy test
// already exhausts the security budget, 0 when xi(0) >= 0.
std::optional<double> find_min_nu(double eps_s, double eps_1, double n_key, double big_gamma,
                                  double alpha, double n_total, double m_pe);

// Serfling variance proxy sigma*^2 from the PE aggregates.
double sigma_star_sq(const PEStatistics& pe, double n_total, double m_pe, double nu,
                     double delta);

// Statistical fluctuation mu; requires xi in (0, 1).
double mu_fluctuation(double sigma_star_sq_v, double xi, double n_total, double n_key,
                      double m_pe, double alpha, double delta);

// Discrete Shannon entropy of a normalized histogram: -sum p log2 p - log2 delta.
double discrete_entropy(const std::vector<double>& histogram, double delta);

// Error-correction leakage n (H(X_B) - beta I); clamped at zero.
double ec_leakage(double h_b, double mutual_info, double beta, double n_key);

// Assembles the key-length lower bound from the pieces above.  nu is chosen
// above its feasibility threshold by a deterministic grid search minimizing
// mu.  Every failed validity check zeroes the rate and tags abort_reason.
CoherentRateBreakdown key_length_low(const FiniteSizeParams& fs, const PEStatistics& pe,
                                     double leak_ec, double h_xb, double i_xab);

}  // namespace cvsdi
