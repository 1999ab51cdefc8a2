#pragma once

#include <cstdint>

namespace cvsdi {

// Physical model of one protocol run, all variances in shot-noise units.
// The two EPR arms have transmissivities tau_a/tau_b; the injected attack
// modes have variances omega_a/omega_b and quadrature correlations (g, g').
struct ProtocolParams {
  double epr_variance = 1e5;   // V >= 1
  double tau_a = 1.0;          // (0, 1]
  double tau_b = 1.0;          // (0, 1]
  double omega_a = 1.0;        // >= 1
  double omega_b = 1.0;        // >= 1
  double g = 0.0;              // x-quadrature attack correlation
  double g_prime = 0.0;        // p-quadrature attack correlation, kept at -g
  double excess_noise = 0.0;   // xi >= 0
  double beta = 1.0;           // reconciliation efficiency, [0, 1]
  double attenuation_db_per_km = 0.2;

  // Largest |g| compatible with a physical two-mode attack state.
  double g_bound() const;
  // Throws ModelError when any invariant fails.
  void validate() const;
  // Product tau_a * tau_b (the total line transmissivity).
  double total_transmissivity() const { return tau_a * tau_b; }
};

// Reduced covariance matrix of the shared state: blocks aI, bI, cZ.
struct TwoModeCM {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;

  TwoModeCM() = default;
  // Validates physicality (a,b >= 1, positivity, symplectic spectrum >= 1)
  // to the given relative tolerance.
  TwoModeCM(double a_, double b_, double c_, double tolerance = 1e-9);

  double symplectic_delta() const { return a * a + b * b - 2.0 * c * c; }
  double det_d() const { return a * b - c * c; }
};

struct SymplecticSpectrum {
  double lambda1 = 1.0;  // >= lambda2
  double lambda2 = 1.0;  // >= 1
  double delta = 0.0;    // a^2 + b^2 - 2c^2
  double d_det = 0.0;    // ab - c^2
};

enum class AttackMode : std::uint8_t {
  kExplicit,  // use omega_a/omega_b/g from ProtocolParams as given
  kOptimal,   // coherent two-mode attack: g at its physical bound,
              // omega = 1 + T*xi/(1-T) with T the total transmissivity
};

// 10^(-attenuation * distance / 10); throws on negative distance.
double distance_to_transmissivity(double distance_km, double attenuation_db_per_km);

// Builds the Alice-Bob covariance matrix after the lossy channels.
// In kOptimal mode the zero-loss point (tau_a = tau_b = 1) is handled by the
// symmetric limit a = V + xi/2, c = sqrt(V^2-1) - xi/2.
TwoModeCM shared_cm(const ProtocolParams& params, AttackMode mode = AttackMode::kOptimal);

// ProtocolParams with omega/g replaced by their optimal-attack values.
ProtocolParams resolve_optimal_attack(const ProtocolParams& params);

// Closed-form symplectic eigenvalues of the two-mode CM.
SymplecticSpectrum symplectic_eigenvalues(const TwoModeCM& cm);

// Symplectic eigenvalue of Alice's state conditioned on Bob's homodyne:
// lambda3 = sqrt(a (a - c^2/b)).
double conditional_eigenvalue_homodyne(const TwoModeCM& cm);

// Von Neumann entropy kernel G(x) = (x+1) log2(x+1) - x log2 x, G(0) = 0.
double g_von_neumann(double x);

}  // namespace cvsdi
