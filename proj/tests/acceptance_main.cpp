// Acceptance suite: every release-gating requirement evaluated end to end,
// one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "cvsdi/coherent_model.hpp"
#include "cvsdi/collective.hpp"
#include "cvsdi/protocol_mc.hpp"
#include "cvsdi/sweep.hpp"
#include "oracles.hpp"

using namespace cvsdi;

namespace {

int g_failures = 0;

void report(int number, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", number, what.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ProtocolParams reference_params(double distance_km) {
  ProtocolParams p;
  p.epr_variance = 1e5;
  p.excess_noise = 0.001;
  p.beta = 1.0;
  const double t = distance_to_transmissivity(distance_km, p.attenuation_db_per_km);
  p.tau_a = p.tau_b = std::sqrt(t);
  return p;
}

FiniteSizeParams reference_fs(double n_total) {
  FiniteSizeParams fs;
  fs.n_total = static_cast<std::uint64_t>(n_total);
  fs.m_pe = fs.n_total / 2;
  return fs;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// -------- criterion 1 & 2: collective range and PLOB dominance --------

void criterion_1_and_2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> dist, rates;
  for (int i = 0; i <= 250; ++i) {
    dist.push_back(0.1 * i);
    rates.push_back(key_rate_collective(reference_params(dist.back())).key_rate);
  }
  const double elapsed = seconds_since(t0);

  double at18 = 0.0, zero_from = -1.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (std::abs(dist[i] - 18.0) < 1e-9) at18 = rates[i];
    if (dist[i] >= 18.0 && zero_from < 0.0 && rates[i] == 0.0) zero_from = dist[i];
  }
  const bool range_ok = at18 > 0.0 && zero_from > 18.0 && zero_from <= 21.0;
  report(1, range_ok && elapsed < 1.0, "collective rate positive at 18 km, zero by 21 km",
         fmt("rate(18)=%.4f, first zero at %.1f km, %.2f s", at18, zero_from, elapsed));

  bool plob_ok = true;
  double worst = 1e300;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double t = reference_params(dist[i]).total_transmissivity();
    if (t >= 1.0) continue;
    const double margin = plob_bound(t) - rates[i];
    worst = std::min(worst, margin);
    if (rates[i] > plob_bound(t)) plob_ok = false;
  }
  report(2, plob_ok, "collective rate never exceeds the PLOB bound",
         fmt("smallest PLOB margin %.4f bits", worst));
}

// -------- criterion 3: curve ordering --------

void criterion_3() {
  bool ok = true;
  std::string breach = "none";
  for (int i = 0; i <= 250; ++i) {
    const double d = 0.1 * i;
    const ProtocolParams p = reference_params(d);
    const CoherentModelOptions opts;
    const double coll = key_rate_collective(p).key_rate;
    const double asym = key_rate_coherent_asymptotic(p, reference_fs(1e10), opts).key_rate;

    const CoherentModelPoint point = coherent_model_point(p, reference_fs(1e10), opts);
    double prev = asym;
    bool point_ok = coll >= asym;
    for (double n_total : {1e10, 1e9, 1e8, 1e7}) {
      FiniteSizeParams fs = resolve_d0(reference_fs(n_total), point, opts);
      const double leak =
          ec_leakage(point.h_xb, point.i_xab, p.beta, static_cast<double>(fs.n_key()));
      const double rate = key_length_low(fs, point.pe, leak, point.h_xb, point.i_xab).key_rate;
      point_ok = point_ok && prev >= rate;
      prev = rate;
    }
    if (!point_ok && ok) {
      ok = false;
      breach = fmt("first breach at %.1f km", d);
    }
  }
  report(3, ok, "collective >= asymptotic >= N=1e10 >= ... >= N=1e7 at every distance", breach);
}

// -------- criterion 4: block-size cutoff at 5 km --------

void criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  const ProtocolParams p = reference_params(5.0);
  const CoherentModelOptions opts;

  double first_positive = -1.0;
  int zeros_left = 0;
  double rate_1e10 = 0.0;
  for (int i = 0; i <= 60; ++i) {
    const double n_total = 1e6 * std::pow(10.0, 6.0 * i / 60.0);
    const double rate = key_rate_coherent(p, reference_fs(n_total), opts).key_rate;
    if (rate > 0.0 && first_positive < 0.0) first_positive = n_total;
    if (rate == 0.0 && n_total <= 1.0000001e7) ++zeros_left;
    if (i == 40) rate_1e10 = rate;  // 1e6 * 10^4
  }
  const double elapsed = seconds_since(t0);

  const bool zero_below = zeros_left == 11;  // every grid point up to 1e7
  const bool cutoff_ok = first_positive > 1e7 && first_positive <= 1e8;
  report(4, zero_below && rate_1e10 > 0.0 && cutoff_ok && elapsed < 10.0,
         "5 km rate zero for N <= 1e7, positive by N = 1e8, positive at N = 1e10",
         fmt("first positive N = %.2e, rate(1e10) = %.4f, %.2f s", first_positive, rate_1e10,
             elapsed));
}

// -------- criterion 5: oracle equivalence --------

void criterion_5() {
  oracle::TestRng rng(20240808);
  double worst_eig = 0.0;
  int done = 0;
  while (done < 1000) {
    ProtocolParams p;
    p.epr_variance = std::exp(rng.uniform(0.0, std::log(1e5)));
    p.tau_a = rng.uniform(0.05, 1.0);
    p.tau_b = rng.uniform(0.05, 1.0);
    p.omega_a = 1.0 + std::exp(rng.uniform(-6.0, 3.0));
    p.omega_b = 1.0 + std::exp(rng.uniform(-6.0, 3.0));
    p.g = p.g_bound() * rng.uniform(-0.98, 0.98);
    p.excess_noise = 0.0;
    const TwoModeCM cm = shared_cm(p, AttackMode::kExplicit);
    const SymplecticSpectrum s = symplectic_eigenvalues(cm);
    if (std::abs(s.lambda1 - s.lambda2) < 1e-3 * s.lambda1) continue;
    const auto [l1, l2] = oracle::symplectic_eigenvalues_4x4(cm.a, cm.b, cm.c);
    worst_eig = std::max(worst_eig, std::abs(s.lambda1 - l1) / l1);
    worst_eig = std::max(worst_eig, std::abs(s.lambda2 - l2) / l2);
    ++done;
  }

  double worst_nu = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double eps_s = std::pow(10.0, rng.uniform(-24.0, -2.0));
    const double eps_1 = eps_s * rng.uniform(0.1, 0.9);
    const double n_tot = std::pow(10.0, rng.uniform(4.0, 12.0));
    const double m = n_tot * rng.uniform(0.2, 0.8);
    const double n = n_tot - m;
    const double alpha = rng.uniform(10.0, 200.0);
    const double a_target = (eps_s - eps_1) * rng.uniform(0.1, 0.9);
    const double gamma = a_target * a_target / (8.0 * n);
    const auto nu = find_min_nu(eps_s, eps_1, n, gamma, alpha, n_tot, m);
    if (!nu.has_value()) continue;
    double lo = 0.0, hi = alpha;
    while (xi_stat(eps_s, eps_1, n, gamma, hi, alpha, n_tot, m) <= 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (xi_stat(eps_s, eps_1, n, gamma, mid, alpha, n_tot, m) > 0.0 ? hi : lo) = mid;
    }
    worst_nu = std::max(worst_nu, std::abs(*nu - hi) / hi);
  }

  report(5, worst_eig <= 1e-9 && worst_nu <= 1e-10,
         "closed forms match the 4x4 eigenvalue and bisection oracles",
         fmt("worst eigenvalue error %.2e, worst nu error %.2e", worst_eig, worst_nu));
}

// -------- criterion 6: Monte-Carlo consistency --------

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::uint64_t kRounds = 1'000'000;
  const ProtocolParams p = reference_params(5.0);
  const TwoModeCM cm = shared_cm(p);

  const auto rounds = sample_rounds(cm, kRounds, 6001);
  double var_a = 0.0, var_b = 0.0, cov_x = 0.0, cov_p = 0.0;
  for (const QuadratureRound& r : rounds) {
    var_a += r.x_a * r.x_a;
    var_b += r.x_b * r.x_b;
    cov_x += r.x_a * r.x_b;
    cov_p += r.p_a * r.p_b;
  }
  var_a /= kRounds;
  var_b /= kRounds;
  cov_x /= kRounds;
  cov_p /= kRounds;
  const double se_var = std::sqrt(2.0 * cm.a * cm.a / kRounds);
  const double se_cov = std::sqrt((cm.a * cm.b + cm.c * cm.c) / kRounds);
  const bool cm_ok = std::abs(var_a - cm.a) < 5.0 * se_var &&
                     std::abs(var_b - cm.b) < 5.0 * se_var &&
                     std::abs(cov_x - cm.c) < 5.0 * se_cov &&
                     std::abs(cov_p + cm.c) < 5.0 * se_cov;

  const auto kept = sift(rounds);
  const double keep_frac = static_cast<double>(kept.size()) / kRounds;
  const bool sift_ok = std::abs(keep_frac - 0.5) < 5.0 * std::sqrt(0.25 / kRounds);

  const std::size_t m = kept.size() / 2;
  std::vector<double> qa, qb;
  qa.reserve(m);
  qb.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    qa.push_back(kept[i].q_a);
    qb.push_back(kept[i].q_b);
  }
  const double t_hat = estimate_tq(qa, qb);
  std::vector<int> xa, xb;
  xa.reserve(m);
  xb.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    xa.push_back(discretize(t_hat * qa[i], 52.0, 1.0));
    xb.push_back(discretize(qb[i], 52.0, 1.0));
  }
  const PEStatistics pe = pe_statistics(xa, xb, 52.0, 1.0);
  const double t_true = std::sqrt(cm.b / cm.a);
  const QuantizedPairModel model =
      quantized_pair_model(AdcGrid(52.0, 1.0), t_true * t_true * cm.a, cm.b, t_true * cm.c);
  const double se_d =
      std::sqrt((model.expected_distance_sq - std::pow(model.expected_distance, 2)) / m);
  const bool d_ok = std::abs(pe.d_pe - model.expected_distance) < 5.0 * se_d;

  const double elapsed = seconds_since(t0);
  report(6, cm_ok && sift_ok && d_ok && elapsed < 30.0,
         "1e6 simulated rounds reproduce the covariance, sift rate and d^PE",
         fmt("d^PE=%.5f vs model %.5f, %.2f s", pe.d_pe, model.expected_distance, elapsed));
}

// -------- criterion 7: energy test on honest states --------

void criterion_7() {
  ProtocolParams p = reference_params(5.0);
  p.epr_variance = 10.0;  // in-range honest signal for the 52-unit ADC
  const auto rounds = sample_rounds(shared_cm(p), 1'000'000, 7001);
  std::vector<double> xb, pb;
  xb.reserve(rounds.size());
  pb.reserve(rounds.size());
  for (const QuadratureRound& r : rounds) {
    xb.push_back(r.x_b);
    pb.push_back(r.p_b);
  }
  const EnergyTestResult res = energy_test(xb, pb, 0.8, 12.0, 7002);
  report(7, res.passed, "zero energy-test aborts in 1e6 honest rounds at M_th = 12, T = 0.8",
         res.passed ? "no aborts" : fmt("abort at round %.0f", (double)res.abort_round));
}

// -------- criterion 8: mu scaling law --------

void criterion_8() {
  const ProtocolParams p = reference_params(5.0);
  const CoherentRateBreakdown b8 = key_rate_coherent(p, reference_fs(1e8), {});
  const CoherentRateBreakdown b10 = key_rate_coherent(p, reference_fs(1e10), {});
  const double ratio = b8.mu / b10.mu;
  report(8, std::abs(ratio - 10.0) <= 2.0, "mu(1e8)/mu(1e10) = 10 within 20%",
         fmt("ratio %.3f", ratio));
}

// -------- criterion 9: byte-identical reruns --------

void criterion_9() {
  const std::string config_text =
      "mode = mc\n"
      "epr_variance = 30\n"
      "tau_a = 1\n"
      "tau_b = 1\n"
      "excess_noise = 0\n"
      "n_total = 200000\n"
      "m_pe = 100000\n"
      "alpha = 201\n"
      "delta = 0.75\n"
      "t_split = 0.97\n"
      "tap_in_model = true\n"
      "entropy_model = quantized\n"
      "seed = 31337\n";
  const std::string a = emit_csv(run(parse_config_text(config_text, "mc")));
  const std::string b = emit_csv(run(parse_config_text(config_text, "mc")));

  const std::string sweep_text =
      "mode = collective\nepr_variance = 1e5\nexcess_noise = 0.001\n"
      "[sweep]\nparam = distance_km\nfrom = 0\nto = 25\nsteps = 51\n";
  const std::string c = emit_csv(run(parse_config_text(sweep_text, "sw")));
  const std::string d = emit_csv(run(parse_config_text(sweep_text, "sw")));

  report(9, a == b && c == d && !a.empty() && !c.empty(),
         "identical (config, seed) produce byte-identical CSV",
         fmt("mc bytes %.0f, sweep bytes %.0f", (double)a.size(), (double)c.size()));
}

}  // namespace

int main() {
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
  } else {
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
