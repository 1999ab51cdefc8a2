#include "cvsdi/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cvsdi/errors.hpp"

namespace cvsdi {

namespace {
constexpr double kPhysicalityTol = 1e-9;
}

double ProtocolParams::g_bound() const {
  const double left = std::sqrt((omega_a - 1.0) * (omega_b + 1.0));
  const double right = std::sqrt((omega_a + 1.0) * (omega_b - 1.0));
  return std::min(left, right);
}

void ProtocolParams::validate() const {
  if (!(epr_variance >= 1.0)) throw ModelError("epr_variance must be >= 1 shot-noise unit");
  if (!(tau_a > 0.0 && tau_a <= 1.0)) throw ModelError("tau_a must lie in (0, 1]");
  if (!(tau_b > 0.0 && tau_b <= 1.0)) throw ModelError("tau_b must lie in (0, 1]");
  if (!(omega_a >= 1.0)) throw ModelError("omega_a must be >= 1 shot-noise unit");
  if (!(omega_b >= 1.0)) throw ModelError("omega_b must be >= 1 shot-noise unit");
  if (!(excess_noise >= 0.0)) throw ModelError("excess_noise must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ModelError("beta must lie in [0, 1]");
  if (!(attenuation_db_per_km >= 0.0)) throw ModelError("attenuation must be >= 0 dB/km");
  const double bound = g_bound();
  if (std::abs(g) > bound * (1.0 + kPhysicalityTol) + kPhysicalityTol) {
    throw ModelError("attack correlation |g| = " + std::to_string(std::abs(g)) +
                     " exceeds the physical bound " + std::to_string(bound));
  }
}

TwoModeCM::TwoModeCM(double a_, double b_, double c_, double tolerance) : a(a_), b(b_), c(c_) {
  if (!(a >= 1.0 - tolerance) || !(b >= 1.0 - tolerance)) {
    throw ModelError("covariance matrix diagonal below the vacuum limit");
  }
  // ab - c^2 cancels catastrophically for strongly squeezed states, so the
  // checks carry a roundoff allowance proportional to the summand magnitude.
  const double cancel = 32.0 * 2.3e-16 * (a * b + c * c);
  if (!(c * c < a * b + cancel)) {
    throw ModelError("covariance matrix not positive definite (c^2 >= ab)");
  }
  const double delta = symplectic_delta();
  const double d = det_d();
  const double disc = std::max(0.0, (a - b) * (a - b) * (a + b - 2.0 * c) * (a + b + 2.0 * c));
  const double lam1_sq = 0.5 * (delta + std::sqrt(disc));
  const double lam2 = d / std::sqrt(lam1_sq);
  const double tol = tolerance + cancel / std::max(d, 1e-300);
  if (!(lam2 >= 1.0 - tol)) {
    throw ModelError("unphysical covariance matrix: symplectic eigenvalue " +
                     std::to_string(lam2) + " < 1");
  }
}

double distance_to_transmissivity(double distance_km, double attenuation_db_per_km) {
  if (distance_km < 0.0) throw std::domain_error("distance must be >= 0 km");
  if (attenuation_db_per_km < 0.0) throw std::domain_error("attenuation must be >= 0 dB/km");
  return std::pow(10.0, -attenuation_db_per_km * distance_km / 10.0);
}

ProtocolParams resolve_optimal_attack(const ProtocolParams& params) {
  ProtocolParams out = params;
  const double t = params.total_transmissivity();
  if (t < 1.0) {
    const double omega = 1.0 + t * params.excess_noise / (1.0 - t);
    out.omega_a = omega;
    out.omega_b = omega;
    out.g = std::sqrt((omega - 1.0) * (omega + 1.0));
  } else {
    // Zero-loss point: omega diverges while (1 - tau) vanishes; shared_cm
    // applies the symmetric limit directly.
    out.omega_a = 1.0;
    out.omega_b = 1.0;
    out.g = 0.0;
  }
  out.g_prime = -out.g;
  return out;
}

TwoModeCM shared_cm(const ProtocolParams& params, AttackMode mode) {
  params.validate();
  const double v = params.epr_variance;
  // sqrt(V^2 - 1) via the stable product form.
  const double corr = std::sqrt(v - 1.0) * std::sqrt(v + 1.0);

  if (mode == AttackMode::kOptimal) {
    const double t = params.total_transmissivity();
    if (t >= 1.0) {
      const double xi = params.excess_noise;
      if (xi == 0.0) return TwoModeCM(v, v, corr);
      return TwoModeCM(v + 0.5 * xi, v + 0.5 * xi, corr - 0.5 * xi);
    }
    return shared_cm(resolve_optimal_attack(params), AttackMode::kExplicit);
  }

  const double a = params.tau_a * v + (1.0 - params.tau_a) * params.omega_a;
  const double b = params.tau_b * v + (1.0 - params.tau_b) * params.omega_b;
  const double c = std::sqrt(params.tau_a * params.tau_b) * corr -
                   params.g * std::sqrt(1.0 - params.tau_a) * std::sqrt(1.0 - params.tau_b);
  return TwoModeCM(a, b, c);
}

SymplecticSpectrum symplectic_eigenvalues(const TwoModeCM& cm) {
  SymplecticSpectrum s;
  s.delta = cm.symplectic_delta();
  s.d_det = cm.det_d();
  // delta^2 - 4 D^2 factors exactly as (a-b)^2 (a+b-2c)(a+b+2c), which avoids
  // the cancellation of the textbook form for a ~ b.
  const double disc = (cm.a - cm.b) * (cm.a - cm.b) *
                      (cm.a + cm.b - 2.0 * cm.c) * (cm.a + cm.b + 2.0 * cm.c);
  if (disc < -kPhysicalityTol * s.delta * s.delta) {
    throw ModelError("symplectic discriminant negative beyond tolerance");
  }
  const double root = std::sqrt(std::max(0.0, disc));
  const double lam1_sq = 0.5 * (s.delta + root);
  s.lambda1 = std::sqrt(lam1_sq);
  s.lambda2 = s.d_det / s.lambda1;  // lambda1 * lambda2 = D
  return s;
}

double conditional_eigenvalue_homodyne(const TwoModeCM& cm) {
  if (!(cm.b > 0.0)) throw ModelError("conditional state needs b > 0");
  const double reduced = cm.a - cm.c * cm.c / cm.b;
  const double cancel = 32.0 * 2.3e-16 * (cm.a + cm.c * cm.c / cm.b);
  if (reduced < (1.0 - kPhysicalityTol) / cm.a - cancel) {
    throw ModelError("conditional state below the vacuum limit");
  }
  return std::sqrt(cm.a * std::max(reduced, 1.0 / cm.a));
}

double g_von_neumann(double x) {
  if (x < 0.0) throw std::domain_error("G(x) requires x >= 0");
  if (x == 0.0) return 0.0;
  constexpr double kInvLn2 = 1.4426950408889634;
  return std::log1p(x) * kInvLn2 * (x + 1.0) - x * std::log2(x);
}

}  // namespace cvsdi
