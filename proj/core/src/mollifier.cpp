#include "imclab/mollifier.hpp"

#include <cmath>

namespace imclab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Composite 8-point Gauss-Legendre; overkill for the smooth profile, which
// pins the normalization to machine precision.
template <typename F>
double integrate(const F& f, double a, double b) {
  static const double gx[8] = {
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
      -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
      0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
      0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
      0.2223810344533745, 0.1012285362903763};
  const int panels = 512;
  const double hw = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * hw;
    for (int q = 0; q < 8; ++q)
      total += 0.5 * hw * gw[q] * f(mid + 0.5 * hw * gx[q]);
  }
  return total;
}

}  // namespace

double Mollifier::profile(double rho) {
  if (rho <= 0.5 || rho >= 1.0) return 0.0;
  return std::exp(-1.0 / ((rho - 0.5) * (1.0 - rho)));
}

double Mollifier::profile_deriv(double rho) {
  if (rho <= 0.5 || rho >= 1.0) return 0.0;
  const double q = (rho - 0.5) * (1.0 - rho);
  const double dq = 1.5 - 2.0 * rho;
  return std::exp(-1.0 / q) * dq / (q * q);
}

Mollifier::Mollifier(int dim) : dim_(dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("unsupported dimension");
  const double surface = (dim == 2) ? 2.0 * kPi : 4.0 * kPi;
  const double radial = integrate(
      [dim](double rho) {
        return profile(rho) * ((dim == 2) ? rho : rho * rho);
      },
      0.5, 1.0);
  norm_ = surface * radial;
}

double Mollifier::value(const Vec& x) const {
  return profile(norm(x, dim_)) / norm_;
}

double Mollifier::partial1(const Vec& x) const {
  const double rho = norm(x, dim_);
  if (rho <= 0.5 || rho >= 1.0) return 0.0;
  return profile_deriv(rho) / norm_ * (x[0] / rho);
}

double Mollifier::value_scaled(double eta, const Vec& x) const {
  if (eta <= 0.0) throw InvalidArgument("mollifier scale must be positive");
  Vec y = {0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k) y[k] = x[k] / eta;
  return value(y) * std::pow(eta, -dim_);
}

double Mollifier::partial1_scaled(double eta, const Vec& x) const {
  if (eta <= 0.0) throw InvalidArgument("mollifier scale must be positive");
  Vec y = {0.0, 0.0, 0.0};
  for (int k = 0; k < dim_; ++k) y[k] = x[k] / eta;
  return partial1(y) * std::pow(eta, -dim_ - 1);
}

}  // namespace imclab
