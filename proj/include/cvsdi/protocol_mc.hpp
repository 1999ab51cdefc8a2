#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cvsdi/coherent_model.hpp"
#include "cvsdi/finite_size.hpp"
#include "cvsdi/gaussian.hpp"

namespace cvsdi {

// Counter-based generator: every draw is a pure function of
// (seed, stream, index), so disjoint index ranges can be produced in any
// order or in parallel and replayed exactly.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t raw(std::uint64_t stream, std::uint64_t index) const;
  // Uniform in (0, 1] (safe under log).
  double uniform(std::uint64_t stream, std::uint64_t index) const;
  // Uniform in [0, 1) (safe for exact-count sequential sampling).
  double uniform_co(std::uint64_t stream, std::uint64_t index) const;
  // Two independent standard normals via Box-Muller; consumes raw indices
  // 2*index and 2*index + 1 of the stream.
  void normal_pair(std::uint64_t stream, std::uint64_t index, double& z0, double& z1) const;

 private:
  std::uint64_t seed_;
};

// RNG substreams used by the protocol simulation.
enum : std::uint64_t {
  kStreamBasis = 1,
  kStreamXPair = 2,
  kStreamPPair = 3,
  kStreamTapVacuum = 4,
  kStreamHetVacuum = 5,
  kStreamRole = 6,
};

struct QuadratureRound {
  double x_a = 0.0, p_a = 0.0;
  double x_b = 0.0, p_b = 0.0;
  bool basis_a = false;  // false: x, true: p
  bool basis_b = false;
};

// One post-sift data point before rescaling/discretization.
struct SiftedPair {
  double q_a = 0.0;
  double q_b = 0.0;  // Bob's p-outcomes are sign-flipped so correlations are positive
};

struct SiftedRecord {
  std::uint64_t index = 0;  // sifted-round index
  double q_a = 0.0;         // rescaled continuous value
  double q_b = 0.0;
  int x_a = 0;
  int x_b = 0;
  bool is_pe = false;
};

// Draws `count` i.i.d. rounds of the shared Gaussian state: (x_a, x_b) with
// covariance [[a, c], [c, b]] and (p_a, p_b) with [[a, -c], [-c, b]].
std::vector<QuadratureRound> sample_rounds(const TwoModeCM& cm, std::uint64_t count,
                                           std::uint64_t seed);

// Keeps rounds with matching bases; the kept value is the measured quadrature,
// with Bob's p-outcomes negated to undo the EPR anticorrelation.  The seed is
// unused: sifting is a deterministic function of the announced bases.
std::vector<SiftedPair> sift(std::span<const QuadratureRound> rounds, std::uint64_t seed = 0);

// Variance-matching rescaling factor from the PE samples.
double estimate_tq(std::span<const double> q_a_pe, std::span<const double> q_b_pe);

// Total map onto symbols {1, ..., 2*alpha/delta}; tails merge into the
// outermost symbols.
int discretize(double value, double alpha, double delta);

struct EnergyTestResult {
  bool passed = true;
  std::uint64_t abort_round = 0;  // valid when !passed
  std::vector<double> x_transmitted;
  std::vector<double> p_transmitted;
};

// Beam-splitter tap plus heterodyne thresholding on Bob's modes.  Aborts on
// the first round with |q_t1| > m_th or |p_t2| > m_th.
EnergyTestResult energy_test(std::span<const double> x_b_stream,
                             std::span<const double> p_b_stream, double t_split, double m_th,
                             std::uint64_t seed);

// Aggregates of two equal-length symbol sequences, in bin units.
PEStatistics pe_statistics(std::span<const int> x_a_pe, std::span<const int> x_b_pe,
                           double alpha, double delta);

struct McRunOptions {
  CoherentModelOptions model;     // shared with the analytic pipeline (d0 policy)
  bool energy_test_enabled = true;
  std::string dump_path;          // CSV of sifted records when nonempty
};

struct McRunResult {
  PEStatistics pe;
  double h_emp = 0.0;             // empirical H(X_B) of the key data, bits/symbol
  double i_emp = 0.0;             // empirical discrete I(X_B:X_A), bits/symbol
  double t_q_hat = 1.0;
  std::uint64_t pre_sift_rounds = 0;
  CoherentRateBreakdown breakdown;
};

// One full protocol execution: prepare, energy test, measure, sift, rescale,
// discretize, estimate, and close with the finite-size key length.
// Deterministic given (params, fs, seed, opts).
McRunResult run_protocol(const ProtocolParams& params, const FiniteSizeParams& fs,
                         std::uint64_t seed, const McRunOptions& opts = {});

}  // namespace cvsdi
