#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cvsdi/errors.hpp"
#include "cvsdi/protocol_mc.hpp"

using namespace cvsdi;

namespace {

ProtocolParams reference_params(double distance_km) {
  ProtocolParams p;
  p.epr_variance = 1e5;
  p.excess_noise = 0.001;
  p.beta = 1.0;
  const double t = distance_to_transmissivity(distance_km, p.attenuation_db_per_km);
  p.tau_a = p.tau_b = std::sqrt(t);
  return p;
}

struct Moments {
  double var_xa = 0.0, var_xb = 0.0, cov_x = 0.0, cov_p = 0.0;
};

Moments sample_moments(const std::vector<QuadratureRound>& rounds) {
  Moments m;
  for (const QuadratureRound& r : rounds) {
    m.var_xa += r.x_a * r.x_a;
    m.var_xb += r.x_b * r.x_b;
    m.cov_x += r.x_a * r.x_b;
    m.cov_p += r.p_a * r.p_b;
  }
  const double n = static_cast<double>(rounds.size());
  m.var_xa /= n;
  m.var_xb /= n;
  m.cov_x /= n;
  m.cov_p /= n;
  return m;
}

}  // namespace

TEST_CASE("sampled rounds reproduce the covariance matrix") {
  constexpr std::uint64_t kRounds = 1'000'000;

  SUBCASE("two vacua") {
    const auto rounds = sample_rounds(TwoModeCM(1.0, 1.0, 0.0), kRounds, 11);
    const Moments m = sample_moments(rounds);
    const double se_var = std::sqrt(2.0 / kRounds);
    CHECK(std::abs(m.var_xa - 1.0) < 5.0 * se_var);
    CHECK(std::abs(m.var_xb - 1.0) < 5.0 * se_var);
  }
  SUBCASE("correlated x, anticorrelated p") {
    const TwoModeCM cm(1.5, 1.5, 0.866);
    const auto rounds = sample_rounds(cm, kRounds, 12);
    const Moments m = sample_moments(rounds);
    const double se_cov = std::sqrt((cm.a * cm.b + cm.c * cm.c) / kRounds);
    CHECK(std::abs(m.cov_x - cm.c) < 5.0 * se_cov);
    CHECK(std::abs(m.cov_p + cm.c) < 5.0 * se_cov);
    const double se_var = std::sqrt(2.0 * cm.a * cm.a / kRounds);
    CHECK(std::abs(m.var_xa - cm.a) < 5.0 * se_var);
    CHECK(std::abs(m.var_xb - cm.b) < 5.0 * se_var);
  }
  SUBCASE("same seed gives a bit-identical sequence") {
    const TwoModeCM cm(2.0, 3.0, 1.2);
    const auto a = sample_rounds(cm, 1000, 77);
    const auto b = sample_rounds(cm, 1000, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].x_a == b[i].x_a);
      CHECK(a[i].p_b == b[i].p_b);
      CHECK(a[i].basis_a == b[i].basis_a);
    }
    const auto c = sample_rounds(cm, 1000, 78);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= (a[i].x_a != c[i].x_a);
    CHECK(any_diff);
  }
}

TEST_CASE("sifting keeps matching bases") {
  SUBCASE("forced identical bases keep everything") {
    std::vector<QuadratureRound> rounds(100);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      rounds[i].basis_a = rounds[i].basis_b = (i % 2 == 0);
      rounds[i].x_a = 1.0;
      rounds[i].p_a = 2.0;
      rounds[i].x_b = 3.0;
      rounds[i].p_b = 4.0;
    }
    CHECK(sift(rounds).size() == rounds.size());
  }
  SUBCASE("forced opposite bases keep nothing") {
    std::vector<QuadratureRound> rounds(100);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      rounds[i].basis_a = true;
      rounds[i].basis_b = false;
    }
    CHECK(sift(rounds).empty());
  }
  SUBCASE("fair coins keep about half") {
    constexpr std::uint64_t kRounds = 1'000'000;
    const auto rounds = sample_rounds(TwoModeCM(1.0, 1.0, 0.0), kRounds, 5);
    const auto kept = sift(rounds);
    const double frac = static_cast<double>(kept.size()) / kRounds;
    CHECK(std::abs(frac - 0.5) < 5.0 * std::sqrt(0.25 / kRounds));
  }
  SUBCASE("p-basis values come out positively correlated") {
    const TwoModeCM cm(1.5, 1.5, 0.866);
    const auto rounds = sample_rounds(cm, 500'000, 6);
    double cov = 0.0;
    std::uint64_t n = 0;
    for (const QuadratureRound& r : rounds) {
      if (r.basis_a && r.basis_b) ++n;
    }
    const auto kept = sift(rounds);
    for (const SiftedPair& pair : kept) cov += pair.q_a * pair.q_b;
    cov /= static_cast<double>(kept.size());
    REQUIRE(n > 100'000);  // p-p rounds are really in the kept set
    const double se = std::sqrt((cm.a * cm.b + cm.c * cm.c) / kept.size());
    CHECK(std::abs(cov - cm.c) < 5.0 * se);
  }
}

TEST_CASE("rescaling factor estimation") {
  SUBCASE("exact scaling") {
    std::vector<double> a = {1.0, -2.0, 0.5, 3.0, -1.5};
    std::vector<double> b;
    for (double v : a) b.push_back(2.0 * v);
    CHECK(estimate_tq(a, b) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("symmetric channels give t ~ 1") {
    const auto rounds = sample_rounds(TwoModeCM(4.0, 4.0, 3.5), 1'000'000, 9);
    std::vector<double> qa, qb;
    for (const QuadratureRound& r : rounds) {
      qa.push_back(r.x_a);
      qb.push_back(r.x_b);
    }
    // Var of a variance-ratio estimate: ~ sqrt(2 (1 + rho^2)) / sqrt(m) on the log.
    CHECK(estimate_tq(qa, qb) == doctest::Approx(1.0).epsilon(5.0 * 2.0 / 1000.0));
  }
  SUBCASE("asymmetric variances give the variance-matching ratio") {
    // b = 1 pins Bob's mode to the vacuum, which forces c = 0 for positivity.
    const auto rounds = sample_rounds(TwoModeCM(4.0, 1.0, 0.0), 1'000'000, 10);
    std::vector<double> qa, qb;
    for (const QuadratureRound& r : rounds) {
      qa.push_back(r.x_a);
      qb.push_back(r.x_b);
    }
    CHECK(estimate_tq(qa, qb) == doctest::Approx(0.5).epsilon(5.0 * 2.0 / 1000.0));
  }
  SUBCASE("degenerate data is rejected") {
    std::vector<double> flat = {1.0, 1.0, 1.0};
    std::vector<double> b = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(estimate_tq(flat, b), DataError);
    std::vector<double> one = {1.0};
    CHECK_THROWS_AS(estimate_tq(one, one), DataError);
  }
}

TEST_CASE("discretization op") {
  CHECK(discretize(-0.75, 1.0, 0.5) == 1);
  CHECK(discretize(-0.2, 1.0, 0.5) == 2);
  CHECK(discretize(0.2, 1.0, 0.5) == 3);
  CHECK(discretize(2.0, 1.0, 0.5) == 4);
  CHECK(discretize(1.0, 1.0, 0.5) == 4);     // value = alpha: last symbol
  CHECK(discretize(-0.4999, 1.0, 0.5) == 2); // just above -alpha + delta
  // Totality over wild inputs.
  for (double v : {-1e12, -5.3, 0.0, 1e-9, 7.7, 1e12}) {
    const int s = discretize(v, 52.0, 1.0);
    CHECK(s >= 1);
    CHECK(s <= 104);
  }
}

TEST_CASE("energy test") {
  SUBCASE("honest moderate-variance state never trips the threshold") {
    ProtocolParams p = reference_params(5.0);
    p.epr_variance = 10.0;
    const TwoModeCM cm = shared_cm(p);
    const auto rounds = sample_rounds(cm, 1'000'000, 21);
    std::vector<double> xb, pb;
    xb.reserve(rounds.size());
    for (const QuadratureRound& r : rounds) {
      xb.push_back(r.x_b);
      pb.push_back(r.p_b);
    }
    const EnergyTestResult res = energy_test(xb, pb, 0.8, 12.0, 22);
    CHECK(res.passed);
    CHECK(res.x_transmitted.size() == rounds.size());
    // Transmitted variance drops to T b + (1 - T).
    double var = 0.0;
    for (double v : res.x_transmitted) var += v * v;
    var /= static_cast<double>(res.x_transmitted.size());
    const double expect = 0.8 * cm.b + 0.2;
    CHECK(std::abs(var - expect) < 5.0 * std::sqrt(2.0 * expect * expect / 1e6));
  }
  SUBCASE("an injected high-energy round aborts") {
    std::vector<double> xb(1000, 0.1), pb(1000, 0.1);
    xb[437] = 100.0;  // reflected magnitude ~ sqrt(0.2)*100/sqrt(2) ~ 31.6 >> 12
    const EnergyTestResult res = energy_test(xb, pb, 0.8, 12.0, 23);
    CHECK(!res.passed);
    CHECK(res.abort_round == 437);
  }
  SUBCASE("near-unit tap transmissivity reflects almost pure vacuum") {
    ProtocolParams p = reference_params(5.0);
    p.epr_variance = 10.0;
    const auto rounds = sample_rounds(shared_cm(p), 1'000'000, 24);
    std::vector<double> xb, pb;
    for (const QuadratureRound& r : rounds) {
      xb.push_back(r.x_b);
      pb.push_back(r.p_b);
    }
    CHECK(energy_test(xb, pb, 0.9999, 12.0, 25).passed);
  }
  SUBCASE("tap transmissivity is validated") {
    std::vector<double> xb(10, 0.0), pb(10, 0.0);
    CHECK_THROWS_AS(energy_test(xb, pb, 0.4, 12.0, 1), ConfigError);
    CHECK_THROWS_AS(energy_test(xb, pb, 1.0, 12.0, 1), ConfigError);
  }
}

TEST_CASE("PE statistics") {
  SUBCASE("identical sequences") {
    std::vector<int> x = {5, 9, 2, 14, 7};
    const PEStatistics pe = pe_statistics(x, x, 8.0, 1.0);
    CHECK(pe.d_pe == 0.0);
    CHECK(pe.v_d_pe == 0.0);
  }
  SUBCASE("unit offset everywhere") {
    std::vector<int> x = {5, 9, 2, 14, 7};
    std::vector<int> y;
    for (int v : x) y.push_back(v + 1);
    const PEStatistics pe = pe_statistics(x, y, 8.0, 1.0);
    CHECK(pe.d_pe == 1.0);
    CHECK(pe.v_d_pe == 1.0);
  }
  SUBCASE("length mismatch") {
    std::vector<int> x = {1, 2};
    std::vector<int> y = {1};
    CHECK_THROWS_AS(pe_statistics(x, y, 8.0, 1.0), DataError);
  }
  SUBCASE("simulated aggregates match the quantized-model expectation") {
    const ProtocolParams p = reference_params(5.0);
    const TwoModeCM cm = shared_cm(p);
    const auto rounds = sample_rounds(cm, 1'000'000, 31);
    const auto kept = sift(rounds);
    const std::size_t m = kept.size() / 2;
    std::vector<double> qa, qb;
    for (std::size_t i = 0; i < m; ++i) {
      qa.push_back(kept[i].q_a);
      qb.push_back(kept[i].q_b);
    }
    const double t_hat = estimate_tq(qa, qb);
    std::vector<int> xa, xb;
    for (std::size_t i = 0; i < m; ++i) {
      xa.push_back(discretize(t_hat * qa[i], 52.0, 1.0));
      xb.push_back(discretize(qb[i], 52.0, 1.0));
    }
    const PEStatistics pe = pe_statistics(xa, xb, 52.0, 1.0);
    CHECK(pe.d_pe * pe.d_pe <= pe.v_d_pe);

    const AdcGrid grid(52.0, 1.0);
    const double t_true = std::sqrt(cm.b / cm.a);
    const QuantizedPairModel model =
        quantized_pair_model(grid, t_true * t_true * cm.a, cm.b, t_true * cm.c);
    const double se_d =
        std::sqrt((model.expected_distance_sq - std::pow(model.expected_distance, 2)) / m);
    CHECK(std::abs(pe.d_pe - model.expected_distance) < 5.0 * se_d);

    // Second moments: crude SE via the fourth-moment bound of a clipped grid.
    const double se_vx = std::sqrt(2.0) * model.second_moment_b / std::sqrt(static_cast<double>(m));
    CHECK(std::abs(pe.v_xb_pe - model.second_moment_b) < 5.0 * se_vx);
  }
}

TEST_CASE("full protocol run") {
  SUBCASE("identical seeds give identical results") {
    ProtocolParams p = reference_params(2.0);
    p.epr_variance = 20.0;
    FiniteSizeParams fs;
    fs.n_total = 100'000;
    fs.m_pe = 50'000;
    fs.alpha = 52.0;
    fs.delta = 1.0;
    fs.t_split = 0.7;
    McRunOptions opts;
    opts.model.entropy_model = EntropyModel::kQuantized;
    opts.model.tap_in_model = true;
    const McRunResult a = run_protocol(p, fs, 999, opts);
    const McRunResult b = run_protocol(p, fs, 999, opts);
    CHECK(a.pe.d_pe == b.pe.d_pe);
    CHECK(a.pe.v_xa_pe == b.pe.v_xa_pe);
    CHECK(a.t_q_hat == b.t_q_hat);
    CHECK(a.h_emp == b.h_emp);
    CHECK(a.i_emp == b.i_emp);
    CHECK(a.breakdown.key_rate == b.breakdown.key_rate);
    CHECK(a.pre_sift_rounds == b.pre_sift_rounds);

    const McRunResult c = run_protocol(p, fs, 1000, opts);
    CHECK(a.pe.d_pe != c.pe.d_pe);
  }

  SUBCASE("d0 = 0 on a noisy channel aborts parameter estimation") {
    ProtocolParams p = reference_params(5.0);
    p.epr_variance = 20.0;
    FiniteSizeParams fs;
    fs.n_total = 20'000;
    fs.m_pe = 10'000;
    fs.d0 = 0.0;
    fs.t_split = 0.7;
    const McRunResult r = run_protocol(p, fs, 3, McRunOptions{});
    CHECK(r.breakdown.key_rate == 0.0);
    CHECK(r.breakdown.abort_reason == "pe_distance_exceeds_threshold");
  }

  SUBCASE("hot state aborts the energy test") {
    ProtocolParams p = reference_params(5.0);  // V = 1e5: tap sees ~95 sigma
    FiniteSizeParams fs;
    fs.n_total = 10'000;
    fs.m_pe = 5'000;
    fs.t_split = 0.8;
    const McRunResult r = run_protocol(p, fs, 4, McRunOptions{});
    CHECK(r.breakdown.key_rate == 0.0);
    CHECK(r.breakdown.abort_reason == "energy_test_abort");
  }

  SUBCASE("round dump has one record per sifted round") {
    ProtocolParams p = reference_params(1.0);
    p.epr_variance = 15.0;
    FiniteSizeParams fs;
    fs.n_total = 2'000;
    fs.m_pe = 1'000;
    fs.t_split = 0.7;
    McRunOptions opts;
    opts.dump_path = "mc_dump_test.csv";
    const McRunResult r = run_protocol(p, fs, 5, opts);
    (void)r;
    std::ifstream in(opts.dump_path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,q_a,q_b,x_a,x_b,role");
    std::size_t rows = 0, pe_rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      if (line.find(",pe") != std::string::npos) ++pe_rows;
    }
    CHECK(rows == fs.n_total);
    CHECK(pe_rows == fs.m_pe);
    std::remove(opts.dump_path.c_str());
  }
}

TEST_CASE("simulated key rate matches the analytic pipeline") {
  // Operating point chosen so the rate is solidly positive at a block the
  // simulation can actually produce: V = 50, lossless line, 3% tap.
  ProtocolParams p;
  p.epr_variance = 50.0;
  p.tau_a = p.tau_b = 1.0;
  p.excess_noise = 0.0;
  p.beta = 1.0;

  FiniteSizeParams fs;
  fs.n_total = 20'000'000;
  fs.m_pe = 10'000'000;
  fs.alpha = 201.0;
  fs.delta = 0.75;
  fs.t_split = 0.97;
  fs.m_th = 12.0;

  McRunOptions opts;
  opts.model.tap_in_model = true;
  opts.model.entropy_model = EntropyModel::kQuantized;

  const CoherentRateBreakdown analytic = key_rate_coherent(p, fs, opts.model);
  REQUIRE(analytic.abort_reason.empty());
  REQUIRE(analytic.key_rate > 0.05);

  const McRunResult mc = run_protocol(p, fs, 20240630, opts);
  REQUIRE(mc.breakdown.abort_reason.empty());

  CHECK(mc.breakdown.key_rate ==
        doctest::Approx(analytic.key_rate).epsilon(0.10));
  CHECK(mc.h_emp == doctest::Approx(analytic.h_xb).epsilon(0.01));
  CHECK(mc.i_emp == doctest::Approx(analytic.i_xab).epsilon(0.01));
  CHECK(mc.pe.d_pe == doctest::Approx(analytic.d0 / 1.7).epsilon(0.02));
  CHECK(mc.t_q_hat == doctest::Approx(std::sqrt((0.97 * 50.0 + 0.03) / 50.0)).epsilon(1e-3));
}
