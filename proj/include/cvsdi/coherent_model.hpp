#pragma once

#include "cvsdi/finite_size.hpp"
#include "cvsdi/gaussian.hpp"
#include "cvsdi/quantized_gaussian.hpp"

namespace cvsdi {

// How the analytic pipeline models H(X_B) and I(X_B:X_A) for the leakage
// estimate.  kIdeal treats the ADC as fine-grained and in-range (the
// operating regime the energy test certifies); kQuantized evaluates the
// entropies of the exact discretized Gaussian model and is what a simulated
// run converges to.
enum class EntropyModel { kIdeal, kQuantized };

struct CoherentModelOptions {
  double d0_safety = 1.7;       // d0 = d0_safety * E[d] under the honest model
  bool tap_in_model = false;    // fold the energy-test tap loss into the CM
  EntropyModel entropy_model = EntropyModel::kIdeal;
  AttackMode attack = AttackMode::kOptimal;
};

// Model-expected PE aggregates and leakage entropies at one operating point.
struct CoherentModelPoint {
  TwoModeCM cm;             // CM entering the statistics (tap folded if asked)
  PEStatistics pe;          // expected aggregates under the honest model
  double d_expected = 0.0;  // E[d] before the safety factor
  double h_xb = 0.0;        // bits/symbol
  double i_xab = 0.0;       // bits/symbol
};

// Evaluates the honest-model statistics for the sifted, rescaled, discretized
// pair described by params (optimal attack) and the grid in fs.
CoherentModelPoint coherent_model_point(const ProtocolParams& params, const FiniteSizeParams& fs,
                                        const CoherentModelOptions& opts);

// FiniteSizeParams with d0 resolved by the safety policy when fs.d0 == 0.
FiniteSizeParams resolve_d0(const FiniteSizeParams& fs, const CoherentModelPoint& point,
                            const CoherentModelOptions& opts);

// Full analytic finite-size evaluation at one operating point.
CoherentRateBreakdown key_rate_coherent(const ProtocolParams& params, const FiniteSizeParams& fs,
                                        const CoherentModelOptions& opts = {});

// N -> infinity limit: rate = log2(1/c) - log2 gamma(d0) - (H - beta I),
// clamped at zero.  Finite additive terms are dropped.
CoherentRateBreakdown key_rate_coherent_asymptotic(const ProtocolParams& params,
                                                   const FiniteSizeParams& fs,
                                                   const CoherentModelOptions& opts = {});

}  // namespace cvsdi
