#pragma once

#include <cstdint>
#include <vector>

namespace cvsdi {

// ADC grid: 2*alpha/delta equal bins over (-alpha, alpha], the two infinite
// tails merged into the outermost symbols.
struct AdcGrid {
  double alpha = 52.0;
  double delta = 1.0;

  AdcGrid() = default;
  AdcGrid(double alpha_, double delta_);  // validates 2*alpha/delta integral

  int symbol_count() const { return symbols_; }
  double center() const { return alpha / delta; }  // alpha/delta, in bin units
  // Lower edge of bin k (k = 1..M), i.e. -alpha + (k-1)*delta.
  double lower_edge(int k) const { return -alpha + (k - 1) * delta; }

  // Total map: value -> symbol in {1, ..., 2*alpha/delta}.
  int discretize(double value) const;

 private:
  int symbols_ = 104;
};

// Exact bin masses of N(0, variance) on the grid (tails merged).
std::vector<double> gaussian_bin_masses(const AdcGrid& grid, double variance);

// Second moment of |X - alpha/delta| for X = discretized N(0, variance).
double expected_second_moment(const AdcGrid& grid, double variance);

// Plain discrete Shannon entropy (bits) of the discretized N(0, variance).
double quantized_entropy(const AdcGrid& grid, double variance);

// Joint model of the sifted pair (rescaled Alice, Bob): zero-mean Gaussian
// with Var(A') = var_a, Var(B) = var_b, Cov = cov, both discretized on the
// same grid.  All outputs are in bin units.
struct QuantizedPairModel {
  double expected_distance = 0.0;         // E |X_A - X_B|
  double expected_distance_sq = 0.0;      // E |X_A - X_B|^2
  double second_moment_a = 0.0;           // E |X_A - alpha/delta|^2
  double second_moment_b = 0.0;           // E |X_B - alpha/delta|^2
  double entropy_a = 0.0;                 // H(X_A), bits
  double entropy_b = 0.0;                 // H(X_B), bits
  double joint_entropy = 0.0;             // H(X_A, X_B), bits
  double mutual_information = 0.0;        // I(X_A : X_B), bits
};

QuantizedPairModel quantized_pair_model(const AdcGrid& grid, double var_a, double var_b,
                                        double cov);

}  // namespace cvsdi
