#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "imclab/errors.hpp"

namespace imclab {

/// Point in at most three dimensions; unused trailing coordinates are zero.
using Vec = std::array<double, 3>;

inline double dist(const Vec& a, const Vec& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double norm(const Vec& a, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * a[k];
  return std::sqrt(s);
}

/// Uniform cell-center lattice over [0, L]^d. Cell centers keep every sample
/// point strictly inside the closed box.
struct Grid {
  int dim = 2;
  int cells = 0;
  double side = 1.0;
  double spacing = 0.0;

  std::int64_t total_points() const {
    std::int64_t p = 1;
    for (int k = 0; k < dim; ++k) p *= cells;
    return p;
  }

  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= spacing;
    return v;
  }

  std::array<int, 3> coords(std::int64_t idx) const {
    std::array<int, 3> c = {0, 0, 0};
    for (int k = dim - 1; k >= 0; --k) {
      c[k] = static_cast<int>(idx % cells);
      idx /= cells;
    }
    return c;
  }

  std::int64_t index(const std::array<int, 3>& c) const {
    std::int64_t idx = 0;
    for (int k = 0; k < dim; ++k) idx = idx * cells + c[k];
    return idx;
  }

  bool in_range(const std::array<int, 3>& c) const {
    for (int k = 0; k < dim; ++k)
      if (c[k] < 0 || c[k] >= cells) return false;
    return true;
  }

  Vec point(std::int64_t idx) const {
    const auto c = coords(idx);
    Vec x = {0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) x[k] = (c[k] + 0.5) * spacing;
    return x;
  }

  /// Index of the grid point nearest to x.
  std::int64_t nearest_index(const Vec& x) const {
    std::array<int, 3> c = {0, 0, 0};
    for (int k = 0; k < dim; ++k) {
      int i = static_cast<int>(std::floor(x[k] / spacing));
      if (i < 0) i = 0;
      if (i >= cells) i = cells - 1;
      c[k] = i;
    }
    return index(c);
  }
};

Grid build_grid(int d, int n, double L = 1.0);

/// Smooth bump supported on the closed ball B(center, radius), with
/// closed-form first partials.
class TestFunction {
 public:
  TestFunction(int dim, const Vec& center, double radius,
               double amplitude = 1.0);

  double value(const Vec& x) const;

  /// Partial derivative with respect to coordinate k (1-based).
  double partial(const Vec& x, int k) const;

  int dim() const { return dim_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  double amplitude() const { return amplitude_; }

  /// Requires the support ball to sit strictly inside [0, L]^d with the
  /// given clearance to the boundary.
  void require_clearance(const Grid& grid, double clearance) const;

 private:
  int dim_;
  Vec center_;
  double radius_;
  double amplitude_;
};

/// Riemann sum h^d * sum(values).
double quadrature(std::span<const double> values, const Grid& grid);
std::complex<double> quadrature(std::span<const std::complex<double>> values,
                                const Grid& grid);

/// Grid samples of f and of its partial k.
std::vector<double> sample_on_grid(const TestFunction& tf, const Grid& grid);
std::vector<double> sample_partial_on_grid(const TestFunction& tf,
                                           const Grid& grid, int k);

}  // namespace imclab
