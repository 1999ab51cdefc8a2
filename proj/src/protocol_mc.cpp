#include "cvsdi/protocol_mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "cvsdi/errors.hpp"
#include "cvsdi/quantized_gaussian.hpp"

namespace cvsdi {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::raw(std::uint64_t stream, std::uint64_t index) const {
  return splitmix(seed_ ^ splitmix(stream ^ splitmix(index)));
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t index) const {
  return (static_cast<double>(raw(stream, index) >> 11) + 1.0) * 0x1.0p-53;
}

double CounterRng::uniform_co(std::uint64_t stream, std::uint64_t index) const {
  return static_cast<double>(raw(stream, index) >> 11) * 0x1.0p-53;
}

void CounterRng::normal_pair(std::uint64_t stream, std::uint64_t index, double& z0,
                             double& z1) const {
  const double u1 = uniform(stream, 2 * index);
  const double u2 = uniform(stream, 2 * index + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  z0 = r * std::cos(kTwoPi * u2);
  z1 = r * std::sin(kTwoPi * u2);
}

namespace {

// Cholesky factors for sampling a correlated quadrature pair.
struct PairSampler {
  double sa, cb, sb;
  explicit PairSampler(double a, double b, double c)
      : sa(std::sqrt(a)), cb(c / std::sqrt(a)), sb(std::sqrt(std::max(b - c * c / a, 0.0))) {}

  void x_pair(const CounterRng& rng, std::uint64_t i, double& qa, double& qb) const {
    double z0, z1;
    rng.normal_pair(kStreamXPair, i, z0, z1);
    qa = sa * z0;
    qb = cb * z0 + sb * z1;
  }
  void p_pair(const CounterRng& rng, std::uint64_t i, double& qa, double& qb) const {
    double z0, z1;
    rng.normal_pair(kStreamPPair, i, z0, z1);
    qa = sa * z0;
    qb = -cb * z0 + sb * z1;  // anticorrelated block -cZ
  }
};

}  // namespace

std::vector<QuadratureRound> sample_rounds(const TwoModeCM& cm, std::uint64_t count,
                                           std::uint64_t seed) {
  const CounterRng rng(seed);
  const PairSampler sampler(cm.a, cm.b, cm.c);
  std::vector<QuadratureRound> rounds(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    QuadratureRound& r = rounds[i];
    sampler.x_pair(rng, i, r.x_a, r.x_b);
    sampler.p_pair(rng, i, r.p_a, r.p_b);
    const std::uint64_t bits = rng.raw(kStreamBasis, i);
    r.basis_a = bits & 1u;
    r.basis_b = bits & 2u;
  }
  return rounds;
}

std::vector<SiftedPair> sift(std::span<const QuadratureRound> rounds, std::uint64_t /*seed*/) {
  std::vector<SiftedPair> kept;
  kept.reserve(rounds.size() / 2 + 1);
  for (const QuadratureRound& r : rounds) {
    if (r.basis_a != r.basis_b) continue;
    if (r.basis_a) {
      kept.push_back({r.p_a, -r.p_b});
    } else {
      kept.push_back({r.x_a, r.x_b});
    }
  }
  return kept;
}

double estimate_tq(std::span<const double> q_a_pe, std::span<const double> q_b_pe) {
  if (q_a_pe.size() != q_b_pe.size()) throw DataError("PE sequences must have equal length");
  const std::size_t m = q_a_pe.size();
  if (m < 2) throw DataError("need at least two PE samples to estimate t_q");
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sum_a += q_a_pe[i];
    sum_b += q_b_pe[i];
  }
  const double mean_a = sum_a / m;
  const double mean_b = sum_b / m;
  double ss_a = 0.0, ss_b = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ss_a += (q_a_pe[i] - mean_a) * (q_a_pe[i] - mean_a);
    ss_b += (q_b_pe[i] - mean_b) * (q_b_pe[i] - mean_b);
  }
  if (!(ss_a > 0.0)) throw DataError("degenerate PE data: zero variance on Alice's side");
  return std::sqrt(ss_b / ss_a);
}

int discretize(double value, double alpha, double delta) {
  return AdcGrid(alpha, delta).discretize(value);
}

EnergyTestResult energy_test(std::span<const double> x_b_stream,
                             std::span<const double> p_b_stream, double t_split, double m_th,
                             std::uint64_t seed) {
  if (x_b_stream.size() != p_b_stream.size()) throw DataError("quadrature streams differ in length");
  if (!(t_split > 0.5 && t_split < 1.0)) throw ConfigError("t_split must lie in (1/2, 1)");
  const CounterRng rng(seed);
  const double rt = std::sqrt(t_split);
  const double rr = std::sqrt(1.0 - t_split);
  const double inv_sqrt2 = 0.70710678118654752440;

  EnergyTestResult out;
  out.x_transmitted.reserve(x_b_stream.size());
  out.p_transmitted.reserve(p_b_stream.size());
  for (std::size_t i = 0; i < x_b_stream.size(); ++i) {
    double vx, vp, wx, wp;
    rng.normal_pair(kStreamTapVacuum, i, vx, vp);
    rng.normal_pair(kStreamHetVacuum, i, wx, wp);
    const double q_t1 = (rr * x_b_stream[i] - rt * vx + wx) * inv_sqrt2;
    const double p_t2 = (rr * p_b_stream[i] - rt * vp - wp) * inv_sqrt2;
    if (std::abs(q_t1) > m_th || std::abs(p_t2) > m_th) {
      out.passed = false;
      out.abort_round = i;
      out.x_transmitted.clear();
      out.p_transmitted.clear();
      return out;
    }
    out.x_transmitted.push_back(rt * x_b_stream[i] + rr * vx);
    out.p_transmitted.push_back(rt * p_b_stream[i] + rr * vp);
  }
  return out;
}

PEStatistics pe_statistics(std::span<const int> x_a_pe, std::span<const int> x_b_pe,
                           double alpha, double delta) {
  if (x_a_pe.size() != x_b_pe.size()) throw DataError("PE symbol sequences differ in length");
  if (x_a_pe.empty()) throw DataError("empty PE symbol sequences");
  const double center = alpha / delta;
  const double m = static_cast<double>(x_a_pe.size());
  PEStatistics pe;
  double d = 0.0, d2 = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < x_a_pe.size(); ++i) {
    const double diff = std::abs(static_cast<double>(x_a_pe[i]) - x_b_pe[i]);
    d += diff;
    d2 += diff * diff;
    va += (x_a_pe[i] - center) * (x_a_pe[i] - center);
    vb += (x_b_pe[i] - center) * (x_b_pe[i] - center);
  }
  pe.d_pe = d / m;
  pe.v_d_pe = d2 / m;
  pe.v_xa_pe = va / m;
  pe.v_xb_pe = vb / m;
  return pe;
}

namespace {

// Dense or hashed joint symbol histogram depending on alphabet size.
class JointHistogram {
 public:
  explicit JointHistogram(int symbols) : symbols_(symbols) {
    if (symbols_ <= 2048) dense_.assign(static_cast<std::size_t>(symbols_) * symbols_, 0);
  }

  void add(int xa, int xb) {
    if (!dense_.empty()) {
      ++dense_[static_cast<std::size_t>(xa - 1) * symbols_ + (xb - 1)];
    } else {
      ++sparse_[(static_cast<std::uint64_t>(xa) << 32) | static_cast<std::uint32_t>(xb)];
    }
  }

  // Plug-in mutual information in bits; zero-mass cells contribute zero.
  double mutual_information(std::uint64_t total) const {
    std::unordered_map<int, double> pa, pb;
    double mi = 0.0;
    const double inv = 1.0 / static_cast<double>(total);
    auto visit = [&](int xa, int xb, std::uint64_t count) {
      if (count == 0) return;
      pa[xa] += count * inv;
      pb[xb] += count * inv;
    };
    for_each(visit);
    auto accumulate = [&](int xa, int xb, std::uint64_t count) {
      if (count == 0) return;
      const double pj = count * inv;
      mi += pj * std::log2(pj / (pa.at(xa) * pb.at(xb)));
    };
    for_each(accumulate);
    return std::max(mi, 0.0);
  }

 private:
  template <typename F>
  void for_each(F&& f) const {
    if (!dense_.empty()) {
      for (int xa = 1; xa <= symbols_; ++xa) {
        for (int xb = 1; xb <= symbols_; ++xb) {
          f(xa, xb, dense_[static_cast<std::size_t>(xa - 1) * symbols_ + (xb - 1)]);
        }
      }
    } else {
      for (const auto& [key, count] : sparse_) {
        f(static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu), count);
      }
    }
  }

  int symbols_;
  std::vector<std::uint64_t> dense_;
  std::unordered_map<std::uint64_t, std::uint64_t> sparse_;
};

struct RoundData {
  double q_a = 0.0, q_b = 0.0;  // sifted continuous values (Bob post-tap)
  bool kept = false;
};

// Regenerates round i of the protocol; returns the sifted pair if bases match.
class RoundGenerator {
 public:
  RoundGenerator(const TwoModeCM& cm, const CounterRng& rng, bool tap, double t_split,
                 double m_th)
      : sampler_(cm.a, cm.b, cm.c),
        rng_(rng),
        tap_(tap),
        rt_(std::sqrt(t_split)),
        rr_(std::sqrt(1.0 - t_split)),
        m_th_(m_th) {}

  // Returns false when the energy test trips on this round.
  bool generate(std::uint64_t i, RoundData& out) {
    double x_a, x_b, p_a, p_b;
    sampler_.x_pair(rng_, i, x_a, x_b);
    sampler_.p_pair(rng_, i, p_a, p_b);
    if (tap_) {
      double vx, vp, wx, wp;
      rng_.normal_pair(kStreamTapVacuum, i, vx, vp);
      rng_.normal_pair(kStreamHetVacuum, i, wx, wp);
      const double inv_sqrt2 = 0.70710678118654752440;
      const double q_t1 = (rr_ * x_b - rt_ * vx + wx) * inv_sqrt2;
      const double p_t2 = (rr_ * p_b - rt_ * vp - wp) * inv_sqrt2;
      if (std::abs(q_t1) > m_th_ || std::abs(p_t2) > m_th_) return false;
      x_b = rt_ * x_b + rr_ * vx;
      p_b = rt_ * p_b + rr_ * vp;
    }
    const std::uint64_t bits = rng_.raw(kStreamBasis, i);
    const bool basis_a = bits & 1u;
    const bool basis_b = bits & 2u;
    out.kept = (basis_a == basis_b);
    if (out.kept) {
      out.q_a = basis_a ? p_a : x_a;
      out.q_b = basis_a ? -p_b : x_b;
    }
    return true;
  }

 private:
  PairSampler sampler_;
  const CounterRng& rng_;
  bool tap_;
  double rt_, rr_, m_th_;
};

}  // namespace

McRunResult run_protocol(const ProtocolParams& params, const FiniteSizeParams& fs,
                         std::uint64_t seed, const McRunOptions& opts) {
  params.validate();
  const TwoModeCM cm = shared_cm(params, opts.model.attack);
  const CounterRng rng(seed);
  const AdcGrid grid(fs.alpha, fs.delta);

  // d0 policy shared with the analytic pipeline.
  const CoherentModelPoint model = coherent_model_point(params, fs, opts.model);
  FiniteSizeParams resolved = resolve_d0(fs, model, opts.model);
  resolved.validate();

  McRunResult out;
  const std::uint64_t n_sift = resolved.n_total;
  const std::uint64_t m_pe = resolved.m_pe;
  const std::uint64_t n_key = resolved.n_key();

  RoundGenerator gen(cm, rng, opts.energy_test_enabled, resolved.t_split, resolved.m_th);

  auto abort_with = [&](const std::string& reason) {
    out.breakdown.key_rate = 0.0;
    out.breakdown.abort_reason = reason;
    out.breakdown.d0 = resolved.d0;
    return out;
  };

  // Pass 1: energy test, sifting, role assignment, rescaling moments.
  double sum_a = 0.0, sum_b = 0.0, ss_a = 0.0, ss_b = 0.0;
  {
    std::uint64_t sifted = 0, pe_taken = 0, i = 0;
    RoundData rd;
    while (sifted < n_sift) {
      if (!gen.generate(i, rd)) return abort_with("energy_test_abort");
      if (rd.kept) {
        const double u = rng.uniform_co(kStreamRole, sifted);
        const bool is_pe = u * static_cast<double>(n_sift - sifted) <
                           static_cast<double>(m_pe - pe_taken);
        if (is_pe) {
          ++pe_taken;
          sum_a += rd.q_a;
          sum_b += rd.q_b;
          ss_a += rd.q_a * rd.q_a;
          ss_b += rd.q_b * rd.q_b;
        }
        ++sifted;
      }
      ++i;
    }
    out.pre_sift_rounds = i;
    const double md = static_cast<double>(m_pe);
    const double var_a = ss_a - sum_a * sum_a / md;
    if (!(var_a > 0.0)) throw DataError("degenerate PE data: zero variance on Alice's side");
    out.t_q_hat = std::sqrt((ss_b - sum_b * sum_b / md) / var_a);
  }

  // Pass 2: replay, discretize with the estimated rescaling, accumulate.
  std::vector<std::uint64_t> hist_b(static_cast<std::size_t>(grid.symbol_count()) + 1, 0);
  JointHistogram joint(grid.symbol_count());
  double d_sum = 0.0, d2_sum = 0.0, va_sum = 0.0, vb_sum = 0.0;
  const double center = grid.center();

  std::FILE* dump = nullptr;
  if (!opts.dump_path.empty()) {
    dump = std::fopen(opts.dump_path.c_str(), "w");
    if (dump == nullptr) throw ConfigError("cannot open dump file: " + opts.dump_path);
    std::fputs("index,q_a,q_b,x_a,x_b,role\n", dump);
  }

  {
    std::uint64_t sifted = 0, pe_taken = 0, i = 0;
    RoundData rd;
    while (sifted < n_sift) {
      if (!gen.generate(i, rd)) break;  // cannot happen: pass 1 succeeded
      ++i;
      if (!rd.kept) continue;
      const double u = rng.uniform_co(kStreamRole, sifted);
      const bool is_pe =
          u * static_cast<double>(n_sift - sifted) < static_cast<double>(m_pe - pe_taken);
      SiftedRecord rec;
      rec.index = sifted;
      rec.q_a = out.t_q_hat * rd.q_a;
      rec.q_b = rd.q_b;
      rec.x_a = grid.discretize(rec.q_a);
      rec.x_b = grid.discretize(rec.q_b);
      rec.is_pe = is_pe;
      if (is_pe) {
        ++pe_taken;
        const double diff = std::abs(static_cast<double>(rec.x_a) - rec.x_b);
        d_sum += diff;
        d2_sum += diff * diff;
        va_sum += (rec.x_a - center) * (rec.x_a - center);
        vb_sum += (rec.x_b - center) * (rec.x_b - center);
      } else {
        ++hist_b[static_cast<std::size_t>(rec.x_b)];
        joint.add(rec.x_a, rec.x_b);
      }
      if (dump != nullptr) {
        std::fprintf(dump, "%llu,%.17g,%.17g,%d,%d,%s\n",
                     static_cast<unsigned long long>(rec.index), rec.q_a, rec.q_b, rec.x_a,
                     rec.x_b, rec.is_pe ? "pe" : "key");
      }
      ++sifted;
    }
  }
  if (dump != nullptr) std::fclose(dump);

  const double md = static_cast<double>(m_pe);
  out.pe.d_pe = d_sum / md;
  out.pe.v_d_pe = d2_sum / md;
  out.pe.v_xa_pe = va_sum / md;
  out.pe.v_xb_pe = vb_sum / md;
  out.pe.p_pass_emp = 1.0;  // this execution passed the tests above
  out.pe.t_q_hat = out.t_q_hat;

  std::vector<double> freq(hist_b.size() - 1, 0.0);
  for (std::size_t k = 1; k < hist_b.size(); ++k) {
    freq[k - 1] = static_cast<double>(hist_b[k]) / static_cast<double>(n_key);
  }
  out.h_emp = discrete_entropy(freq, resolved.delta);
  out.i_emp = joint.mutual_information(n_key);

  const double leak = ec_leakage(out.h_emp, out.i_emp, params.beta, static_cast<double>(n_key));
  FiniteSizeParams fs_emp = resolved;
  fs_emp.p_pass = out.pe.p_pass_emp;
  out.breakdown = key_length_low(fs_emp, out.pe, leak, out.h_emp, out.i_emp);
  return out;
}

}  // namespace cvsdi
