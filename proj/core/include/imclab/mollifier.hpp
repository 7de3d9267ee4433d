#pragma once

#include "imclab/grid.hpp"

namespace imclab {

/// Radial mollifier supported in the annulus 1/2 <= |x| <= 1. The inner hole
/// keeps every evaluation of the estimator weight off the diagonal, so no
/// separate singularity cutoff is ever needed.
class Mollifier {
 public:
  explicit Mollifier(int dim);

  int dim() const { return dim_; }
  double normalization() const { return norm_; }

  /// Unnormalized radial profile and its derivative in rho = |x|.
  static double profile(double rho);
  static double profile_deriv(double rho);

  double value(const Vec& x) const;
  /// Analytic d/dx_1 of value().
  double partial1(const Vec& x) const;

  /// phi_eta(x) = eta^-d phi(x/eta); d phi_eta(x) = eta^-(d+1) (d phi)(x/eta).
  double value_scaled(double eta, const Vec& x) const;
  double partial1_scaled(double eta, const Vec& x) const;

 private:
  int dim_;
  double norm_;
};

}  // namespace imclab
