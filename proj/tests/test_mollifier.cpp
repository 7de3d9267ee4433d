#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "imclab/grid.hpp"
#include "imclab/mollifier.hpp"
#include "imclab/rng.hpp"

using namespace imclab;

namespace {

// Independent mass check: Gauss-Legendre (4-point) in the radius over many
// panels of [1/2, 1], times the surface measure of the sphere.
double radial_mass(int dim) {
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374538};
  const double surface = dim == 2 ? 2.0 * M_PI : 4.0 * M_PI;
  const int panels = 256;
  const double a = 0.5, b = 1.0;
  const double hw = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * hw;
    for (int q = 0; q < 4; ++q) {
      const double r = mid + 0.5 * hw * gx[q];
      total += 0.5 * hw * gw[q] * Mollifier::profile(r) *
               std::pow(r, dim - 1);
    }
  }
  return surface * total;
}

}  // namespace

TEST_CASE("mollifier normalization gives unit mass") {
  for (int dim : {2, 3}) {
    Mollifier phi(dim);
    CHECK(radial_mass(dim) / phi.normalization() ==
          doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("support annulus") {
  Mollifier phi(2);
  CHECK(phi.value({0.3, 0.0, 0.0}) == 0.0);
  CHECK(phi.partial1({0.3, 0.0, 0.0}) == 0.0);
  CHECK(phi.value({0.2, 0.2, 0.0}) == 0.0);     // |x| < 1/2
  CHECK(phi.value({1.1, 0.0, 0.0}) == 0.0);     // |x| > 1
  CHECK(phi.value({0.75, 0.0, 0.0}) > 0.0);
  CHECK(phi.value({0.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("scaling law is exact") {
  Mollifier phi2(2);
  Mollifier phi3(3);
  Rng rng({7, 0});
  for (int t = 0; t < 50; ++t) {
    const double eta = 0.02 + 0.3 * rng.uniform();
    Vec x = {1.6 * (rng.uniform() - 0.5), 1.6 * (rng.uniform() - 0.5),
             1.6 * (rng.uniform() - 0.5)};
    Vec xs = {eta * x[0], eta * x[1], eta * x[2]};
    CHECK(phi2.value_scaled(eta, xs) ==
          doctest::Approx(phi2.value(x) / (eta * eta)).epsilon(1e-13));
    CHECK(phi2.partial1_scaled(eta, xs) ==
          doctest::Approx(phi2.partial1(x) / (eta * eta * eta))
              .epsilon(1e-13));
    CHECK(phi3.value_scaled(eta, xs) ==
          doctest::Approx(phi3.value(x) / (eta * eta * eta)).epsilon(1e-13));
  }
}

TEST_CASE("partial1 matches central differences and is odd in x1") {
  Mollifier phi(2);
  Rng rng({8, 0});
  const double step = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const double rho = 0.45 + 0.6 * rng.uniform();
    const double a = 2 * M_PI * rng.uniform();
    Vec x = {rho * std::cos(a), rho * std::sin(a), 0.0};
    const double fd =
        (phi.value({x[0] + step, x[1], 0.0}) -
         phi.value({x[0] - step, x[1], 0.0})) /
        (2 * step);
    CHECK(phi.partial1(x) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    CHECK(phi.partial1({-x[0], x[1], 0.0}) ==
          doctest::Approx(-phi.partial1(x)).epsilon(1e-12).scale(1e-12));
  }
}

TEST_CASE("grid mass of phi_eta and exact cancellation of the gradient") {
  Grid g = build_grid(2, 256, 1.0);
  Mollifier phi(2);
  const double eta = 0.1;
  std::vector<double> vals(g.total_points());
  std::vector<double> dvals(g.total_points());
  const Vec c = {0.5, 0.5, 0.0};
  for (std::int64_t i = 0; i < g.total_points(); ++i) {
    Vec x = g.point(i);
    Vec z = {x[0] - c[0], x[1] - c[1], 0.0};
    vals[i] = phi.value_scaled(eta, z);
    dvals[i] = phi.partial1_scaled(eta, z);
  }
  CHECK(quadrature(vals, g) == doctest::Approx(1.0).epsilon(1e-3));
  // The lattice centered at a grid-symmetric point cancels the odd
  // integrand exactly, far below the 1e-3 quadrature tolerance.
  CHECK(std::abs(quadrature(dvals, g)) <= 1e-3);
}

TEST_CASE("dimension validation") {
  CHECK_THROWS_AS(Mollifier(1), InvalidArgument);
  CHECK_THROWS_AS(Mollifier(4), InvalidArgument);
}
