#include "cvsdi/collective.hpp"

#include <cmath>
#include <limits>

#include "cvsdi/errors.hpp"

namespace cvsdi {

namespace {
// Thermal-state entropy for a symplectic eigenvalue; eigenvalues within
// roundoff below 1 count as vacuum.
double mode_entropy(double lambda) { return g_von_neumann(std::max(0.5 * (lambda - 1.0), 0.0)); }
}  // namespace

double mutual_information(const TwoModeCM& cm) {
  if (!(cm.b > 0.0)) throw std::domain_error("mutual information needs b > 0");
  const double noise = cm.a - cm.c * cm.c / cm.b;
  if (!(noise > 0.0)) throw std::domain_error("conditional variance must be positive");
  return 0.5 * std::log2(cm.a / noise);
}

double holevo_b_e(const TwoModeCM& cm) {
  const SymplecticSpectrum s = symplectic_eigenvalues(cm);
  const double lambda3 = conditional_eigenvalue_homodyne(cm);
  return mode_entropy(s.lambda1) + mode_entropy(s.lambda2) - mode_entropy(lambda3);
}

CollectiveRateBreakdown key_rate_collective(const ProtocolParams& params, AttackMode mode) {
  const TwoModeCM cm = shared_cm(params, mode);
  const SymplecticSpectrum s = symplectic_eigenvalues(cm);
  const double lambda3 = conditional_eigenvalue_homodyne(cm);

  CollectiveRateBreakdown out;
  out.mutual_info = mutual_information(cm);
  out.s_ab = mode_entropy(s.lambda1) + mode_entropy(s.lambda2);
  out.s_a_given_b = mode_entropy(lambda3);
  out.holevo = out.s_ab - out.s_a_given_b;
  out.key_rate_unclamped = params.beta * out.mutual_info - out.holevo;
  out.key_rate = std::max(out.key_rate_unclamped, 0.0);
  return out;
}

double plob_bound(double transmissivity) {
  if (!(transmissivity > 0.0)) throw std::domain_error("PLOB bound needs T > 0");
  if (transmissivity >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::log2(1.0 - transmissivity);
}

}  // namespace cvsdi
