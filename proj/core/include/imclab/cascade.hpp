#pragma once

#include <complex>
#include <vector>

#include "imclab/rng.hpp"

namespace imclab {

/// Dyadic multiplicative cascade on [0,1]: one Gaussian weight per dyadic
/// interval down to `levels`. Cell values are products over the (levels+1)
/// ancestors of each finest cell; the additive field A is the ancestor sum.
class CascadeRealization {
 public:
  CascadeRealization(int levels, double sigma, double beta, SeedStream seed);

  int levels() const { return levels_; }
  double beta() const { return beta_; }
  std::int64_t cell_count() const { return std::int64_t{1} << levels_; }

  double weight(int level, std::int64_t pos) const;

  /// A on the finest cells: sum of ancestor weights.
  std::vector<double> additive_field() const;
  /// Imaginary cascade on the finest cells: product of e^{i beta X} over
  /// ancestors.
  std::vector<std::complex<double>> cascade_values() const;

  /// New realization with the weight of one dyadic interval shifted.
  CascadeRealization shifted(int level, std::int64_t pos, double amount) const;

 private:
  int levels_;
  double sigma_;
  double beta_;
  std::vector<std::vector<double>> weights_;  // weights_[l] has 2^l entries
};

CascadeRealization build_cascade(int levels, double sigma, double beta,
                                 SeedStream seed);

}  // namespace imclab
