#pragma once

#include "cvsdi/gaussian.hpp"

namespace cvsdi {

// Devetak-Winter rate pieces for reverse reconciliation, all in bits.
struct CollectiveRateBreakdown {
  double mutual_info = 0.0;     // I(A:B)
  double s_ab = 0.0;            // S(AB)
  double s_a_given_b = 0.0;     // S(A|B)
  double holevo = 0.0;          // chi(B:E) = S(AB) - S(A|B)
  double key_rate_unclamped = 0.0;
  double key_rate = 0.0;        // max{beta I - chi, 0}
};

// I(A:B) = 1/2 log2( a / (a - c^2/b) ).
double mutual_information(const TwoModeCM& cm);

// Holevo bound chi(B:E) for a purifying eavesdropper.
double holevo_b_e(const TwoModeCM& cm);

// Asymptotic collective-attack key rate under the optimal two-mode attack.
CollectiveRateBreakdown key_rate_collective(const ProtocolParams& params,
                                            AttackMode mode = AttackMode::kOptimal);

// Repeaterless bound -log2(1 - T); returns +infinity for T >= 1.
double plob_bound(double transmissivity);

}  // namespace cvsdi
