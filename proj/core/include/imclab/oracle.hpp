#pragma once

#include <complex>
#include <optional>
#include <string>

#include "imclab/covariance.hpp"
#include "imclab/grid.hpp"

namespace imclab {

struct QuadratureSpec {
  int level = 64;       // subdivisions per axis at the base refinement
  double rel_tol = 1e-3;
};

/// exp(beta^2 [C(x,y) + C(x-u, y-v) - C(x, y-v) - C(y, x-u)]); the signed
/// covariance combination governing the fourth mixed moment of the chaos.
double four_point_E(const CovarianceKernel& K, const Vec& x, const Vec& y,
                    const Vec& u, const Vec& v, double beta);

/// E mu(x) conj(mu(u)) = exp(beta^2 C_delta(x, u)); exact at finite delta.
double girsanov_two_point(const RegularizedKernel& K, const Vec& x,
                          const Vec& u, double beta);

/// E mu(x) conj(mu(u)) Gamma(y)
///   = i beta exp(beta^2 C_delta(x,u)) (C_delta(x,y) - C_delta(u,y)).
std::complex<double> girsanov_three_point(const RegularizedKernel& K,
                                          const Vec& x, const Vec& u,
                                          const Vec& y, double beta);

/// Var of the gradient pairing: double quadrature of
/// d_k f(x) d_k f(y) C(x,y), refinement-checked.
double derivative_variance(const CovarianceKernel& K, const TestFunction& tf,
                           int k, const QuadratureSpec& q = {});

/// beta^2 * triple quadrature of f(x) d_k f(y) d_k C(u,y) phi_eta(x-u).
/// Tends to -beta^2 * derivative_variance as eta -> 0.
double cross_term_quadrature(const CovarianceKernel& K, const TestFunction& tf,
                             double eta, int k, double beta,
                             const QuadratureSpec& q = {});

/// Exact lattice value of E |H_eta|^2 for the estimator with the
/// exp(-beta^2 C_delta) weight on this grid: the four-fold annulus sum of
/// f(x) f(y) exp(beta^2 [C(x,y) + C(u,v) - C(x,v) - C(y,u)]) with every C
/// the regularized covariance the chaos was actually built from.
double second_moment_H_quadrature(const RegularizedKernel& K, const Grid& grid,
                                  const TestFunction& tf, double eta, int k,
                                  double beta);

/// Exact lattice value of E H_eta1 conj(H_eta2), same weights; reduces to
/// the second moment at eta1 = eta2.
double offdiag_covariance_quadrature(const RegularizedKernel& K,
                                     const Grid& grid, const TestFunction& tf,
                                     double eta1, double eta2, int k,
                                     double beta);

/// Exact lattice value of E[H_eta * T] where T is the grid gradient pairing;
/// equals -i beta * (lattice cross term). The MC mean of H*T is tested
/// against this with no discretization slack.
std::complex<double> estimator_truth_cross_moment(const RegularizedKernel& K,
                                                  const Grid& grid,
                                                  const TestFunction& tf,
                                                  double eta, int k,
                                                  double beta);

/// JSON-backed memo of oracle values keyed by a caller-assembled parameter
/// string.
class OracleCache {
 public:
  explicit OracleCache(std::string path);
  std::optional<double> get(const std::string& key) const;
  void put(const std::string& key, double value);

 private:
  std::string path_;
};

}  // namespace imclab
