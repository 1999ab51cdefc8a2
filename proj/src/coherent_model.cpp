#include "cvsdi/coherent_model.hpp"

#include <algorithm>
#include <cmath>

#include "cvsdi/collective.hpp"
#include "cvsdi/errors.hpp"

namespace cvsdi {

namespace {
constexpr double kTwoPiE = 17.07946844534713413;

// CM seen by the post-tap data: Bob's mode passes the energy-test splitter.
TwoModeCM fold_tap(const TwoModeCM& cm, double t_split) {
  return TwoModeCM(cm.a, t_split * cm.b + (1.0 - t_split), std::sqrt(t_split) * cm.c);
}
}  // namespace

CoherentModelPoint coherent_model_point(const ProtocolParams& params, const FiniteSizeParams& fs,
                                        const CoherentModelOptions& opts) {
  const TwoModeCM raw = shared_cm(params, opts.attack);
  const TwoModeCM cm = opts.tap_in_model ? fold_tap(raw, fs.t_split) : raw;

  CoherentModelPoint point;
  point.cm = cm;

  // Rescaling matches Alice's variance to Bob's: t = sqrt(b/a).
  const double t_q = std::sqrt(cm.b / cm.a);
  const double var_a_scaled = cm.b;  // t^2 a
  const double cov_scaled = t_q * cm.c;

  const AdcGrid grid(fs.alpha, fs.delta);
  const QuantizedPairModel q = quantized_pair_model(grid, var_a_scaled, cm.b, cov_scaled);

  point.d_expected = q.expected_distance;
  point.pe.d_pe = q.expected_distance;
  point.pe.v_d_pe = q.expected_distance_sq;
  point.pe.v_xa_pe = q.second_moment_a;
  point.pe.v_xb_pe = q.second_moment_b;
  point.pe.p_pass_emp = fs.p_pass;
  point.pe.t_q_hat = t_q;

  if (opts.entropy_model == EntropyModel::kIdeal) {
    // Fine-grained in-range Gaussian: -sum p log2 p ~ h - log2 delta.
    const double log2_delta = std::log2(fs.delta);
    point.h_xb = 0.5 * std::log2(kTwoPiE * cm.b) - 2.0 * log2_delta;
    point.i_xab = mutual_information(cm);
  } else {
    point.h_xb = q.entropy_b - std::log2(fs.delta);
    point.i_xab = q.mutual_information;
  }
  return point;
}

FiniteSizeParams resolve_d0(const FiniteSizeParams& fs, const CoherentModelPoint& point,
                            const CoherentModelOptions& opts) {
  FiniteSizeParams out = fs;
  if (out.d0 < 0.0) out.d0 = opts.d0_safety * point.d_expected;
  return out;
}

CoherentRateBreakdown key_rate_coherent(const ProtocolParams& params, const FiniteSizeParams& fs,
                                        const CoherentModelOptions& opts) {
  const CoherentModelPoint point = coherent_model_point(params, fs, opts);
  const FiniteSizeParams resolved = resolve_d0(fs, point, opts);
  const double leak =
      ec_leakage(point.h_xb, point.i_xab, params.beta, static_cast<double>(resolved.n_key()));
  return key_length_low(resolved, point.pe, leak, point.h_xb, point.i_xab);
}

CoherentRateBreakdown key_rate_coherent_asymptotic(const ProtocolParams& params,
                                                   const FiniteSizeParams& fs,
                                                   const CoherentModelOptions& opts) {
  const CoherentModelPoint point = coherent_model_point(params, fs, opts);
  const FiniteSizeParams resolved = resolve_d0(fs, point, opts);

  CoherentRateBreakdown out;
  out.d0 = resolved.d0;
  out.h_xb = point.h_xb;
  out.i_xab = point.i_xab;
  out.overlap_term = std::log2(1.0 / overlap_c(resolved.delta));
  out.gamma_term = std::log2(gamma_dev(resolved.d0));
  const double leak_per_symbol = std::max(point.h_xb - params.beta * point.i_xab, 0.0);
  out.leak_ec = leak_per_symbol;  // per symbol in the asymptotic limit
  const double rate = out.overlap_term - out.gamma_term - leak_per_symbol;
  out.ell_low = rate;  // per-symbol form; additive constants vanish
  out.key_rate = std::max(rate, 0.0);
  return out;
}

}  // namespace cvsdi
