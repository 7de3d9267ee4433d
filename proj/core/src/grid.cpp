#include "imclab/grid.hpp"

#include <algorithm>

namespace imclab {

Grid build_grid(int d, int n, double L) {
  if (d != 2 && d != 3) throw InvalidArgument("unsupported dimension");
  if (n < 8) throw InvalidArgument("grid too coarse: need n >= 8");
  if (L <= 0.0) throw InvalidArgument("side length must be positive");
  Grid g;
  g.dim = d;
  g.cells = n;
  g.side = L;
  g.spacing = L / n;
  return g;
}

TestFunction::TestFunction(int dim, const Vec& center, double radius,
                           double amplitude)
    : dim_(dim), center_(center), radius_(radius), amplitude_(amplitude) {
  if (dim != 2 && dim != 3) throw InvalidArgument("unsupported dimension");
  if (radius <= 0.0) throw InvalidArgument("test function radius must be > 0");
}

double TestFunction::value(const Vec& x) const {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double d = (x[k] - center_[k]) / radius_;
    s += d * d;
  }
  if (s >= 1.0) return 0.0;
  return amplitude_ * std::exp(-1.0 / (1.0 - s));
}

double TestFunction::partial(const Vec& x, int k) const {
  if (k < 1 || k > dim_) throw InvalidArgument("partial index out of range");
  double s = 0.0;
  for (int j = 0; j < dim_; ++j) {
    const double d = (x[j] - center_[j]) / radius_;
    s += d * d;
  }
  if (s >= 1.0) return 0.0;
  const double one_minus = 1.0 - s;
  const double f = amplitude_ * std::exp(-1.0 / one_minus);
  const double ds = 2.0 * (x[k - 1] - center_[k - 1]) / (radius_ * radius_);
  return -f * ds / (one_minus * one_minus);
}

void TestFunction::require_clearance(const Grid& grid, double clearance) const {
  for (int k = 0; k < dim_; ++k) {
    const double lo = center_[k] - radius_;
    const double hi = center_[k] + radius_;
    if (lo - clearance < 0.0 || hi + clearance > grid.side)
      throw SupportViolation("test function support too close to boundary");
  }
}

double quadrature(std::span<const double> values, const Grid& grid) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

std::complex<double> quadrature(std::span<const std::complex<double>> values,
                                const Grid& grid) {
  std::complex<double> s = 0.0;
  for (const auto& v : values) s += v;
  return s * grid.cell_volume();
}

std::vector<double> sample_on_grid(const TestFunction& tf, const Grid& grid) {
  const std::int64_t total = grid.total_points();
  std::vector<double> out(total);
  for (std::int64_t i = 0; i < total; ++i) out[i] = tf.value(grid.point(i));
  return out;
}

std::vector<double> sample_partial_on_grid(const TestFunction& tf,
                                           const Grid& grid, int k) {
  const std::int64_t total = grid.total_points();
  std::vector<double> out(total);
  for (std::int64_t i = 0; i < total; ++i) out[i] = tf.partial(grid.point(i), k);
  return out;
}

}  // namespace imclab
