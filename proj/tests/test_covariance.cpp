#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "imclab/covariance.hpp"
#include "imclab/rng.hpp"

using namespace imclab;

TEST_CASE("pure log values and partials") {
  auto K = CovarianceKernel::pure_log(2);
  CHECK(K.value({0.75, 0.5, 0.0}, {0.25, 0.5, 0.0}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(K.value({1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  // d/dx1 of -log|x-y| at x-y=(0.5,0) is -1/0.5.
  CHECK(K.partial({0.5, 0.0, 0.0}, {0.0, 0.0, 0.0},
                  CovarianceKernel::Slot::X1) ==
        doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(K.partial({0.0, 0.5, 0.0}, {0.0, 0.0, 0.0},
                  CovarianceKernel::Slot::X1) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(K.value({0.3, 0.3, 0.0}, {0.3, 0.3, 0.0}),
                  DiagonalSingularity);
}

TEST_CASE("symmetry for every kind") {
  std::vector<CovarianceKernel> kernels;
  kernels.push_back(CovarianceKernel::pure_log(2));
  kernels.push_back(CovarianceKernel::gff_square(64));
  kernels.push_back(CovarianceKernel::log_plus_const(2, 0.7));
  kernels.push_back(CovarianceKernel::constant(2, 1.3));
  Rng rng({21, 0});
  for (const auto& K : kernels) {
    for (int t = 0; t < 40; ++t) {
      Vec x = {0.1 + 0.8 * rng.uniform(), 0.1 + 0.8 * rng.uniform(), 0.0};
      Vec y = {0.1 + 0.8 * rng.uniform(), 0.1 + 0.8 * rng.uniform(), 0.0};
      const double a = K.value(x, y);
      const double b = K.value(y, x);
      CHECK(a == doctest::Approx(b).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("square kernel vanishes at the boundary and matches the mode sum") {
  auto K = CovarianceKernel::gff_square(256);
  // y on the boundary: every sine factor is zero there.
  CHECK(K.value({0.4, 0.6, 0.0}, {0.0, 0.3, 0.0}) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(K.value({0.4, 0.6, 0.0}, {0.7, 1.0, 0.0}) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

  // Independent mode sum at one interior pair.
  const Vec x = {0.31, 0.57, 0.0}, y = {0.44, 0.4, 0.0};
  double s = 0.0;
  for (int j = 1; j <= 256; ++j)
    for (int l = 1; l <= 256; ++l)
      s += K.gff_weight(j, l) * 4.0 * std::sin(M_PI * j * x[0]) *
           std::sin(M_PI * l * x[1]) * std::sin(M_PI * j * y[0]) *
           std::sin(M_PI * l * y[1]);
  CHECK(K.value(x, y) == doctest::Approx(s).epsilon(1e-10));
  CHECK(K.gff_weight(3, 4) == doctest::Approx(2.0 / (M_PI * 25.0)));
}

TEST_CASE("square kernel partials match central differences") {
  auto K = CovarianceKernel::gff_square(32);
  Rng rng({22, 0});
  const double step = 1e-5;
  for (int t = 0; t < 40; ++t) {
    Vec x = {0.15 + 0.7 * rng.uniform(), 0.15 + 0.7 * rng.uniform(), 0.0};
    Vec y = {0.15 + 0.7 * rng.uniform(), 0.15 + 0.7 * rng.uniform(), 0.0};
    Vec xp = x, xm = x;
    xp[0] += step;
    xm[0] -= step;
    const double fd = (K.value(xp, y) - K.value(xm, y)) / (2 * step);
    CHECK(K.partial(x, y, CovarianceKernel::Slot::X1) ==
          doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    Vec yp = y, ym = y;
    yp[0] += step;
    ym[0] -= step;
    const double fdy = (K.value(x, yp) - K.value(x, ym)) / (2 * step);
    CHECK(K.partial(x, y, CovarianceKernel::Slot::Y1) ==
          doctest::Approx(fdy).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("square kernel short-distance log slope") {
  auto K = CovarianceKernel::gff_square(64);
  const Vec c = {0.5, 0.5, 0.0};
  // Fit C(c, c + r e) ~ -log r + const over resolved separations.
  std::vector<double> xs, ys;
  for (double r = 4.0 / 64; r <= 0.1; r += 0.01) {
    xs.push_back(-std::log(r));
    ys.push_back(K.value(c, {c[0] + r, c[1], 0.0}));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  CHECK(num / den == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("smooth part and fault-injection offset") {
  auto K = CovarianceKernel::log_plus_const(2, 0.7);
  CHECK(K.smooth_part({0.2, 0.2, 0.0}, {0.6, 0.7, 0.0}) ==
        doctest::Approx(0.7).epsilon(1e-15));
  auto Koff = K.with_offset(10.0);
  CHECK(Koff.value({0.3, 0.3, 0.0}, {0.5, 0.5, 0.0}) ==
        doctest::Approx(K.value({0.3, 0.3, 0.0}, {0.5, 0.5, 0.0}) + 10.0)
            .epsilon(1e-13));
  CHECK_THROWS_AS(
      CovarianceKernel::gff_square(32).smooth_part({0.4, 0.4, 0.0},
                                                   {0.5, 0.5, 0.0}),
      InvalidArgument);
}

TEST_CASE("regularized kernel: spectral variance grows with J") {
  auto base = CovarianceKernel::gff_square(256);
  RegularizedKernel r32(base, RegularizationSpec::spectral(32));
  RegularizedKernel r64(base, RegularizationSpec::spectral(64));
  RegularizedKernel r128(base, RegularizationSpec::spectral(128));
  const Vec c = {0.5, 0.5, 0.0};
  CHECK(r32.sigma2(c) < r64.sigma2(c));
  CHECK(r64.sigma2(c) < r128.sigma2(c));
  // sigma^2 = C_delta(x, x) is finite where the base kernel diverges.
  CHECK(std::isfinite(r64.sigma2(c)));
}

TEST_CASE("regularized kernel: mollified constant stays constant") {
  auto base = CovarianceKernel::constant(2, 1.3);
  RegularizedKernel reg(base, RegularizationSpec::mollify(0.05));
  CHECK(reg.value({0.3, 0.4, 0.0}, {0.6, 0.5, 0.0}) ==
        doctest::Approx(1.3).epsilon(1e-6));
  CHECK(reg.sigma2({0.5, 0.5, 0.0}) == doctest::Approx(1.3).epsilon(1e-6));
}

TEST_CASE("mollified log converges to the kernel away from the diagonal") {
  auto base = CovarianceKernel::pure_log(2);
  const Vec x = {0.3, 0.5, 0.0};
  const Vec y = {0.8, 0.5, 0.0};  // |x-y| = 0.5
  double prev = 0.0;
  for (int step = 0; step < 3; ++step) {
    const double delta = 0.04 / (1 << step);  // |x-y| >= 10 delta throughout
    RegularizedKernel reg(base, RegularizationSpec::mollify(delta));
    const double err = std::abs(reg.value(x, y) - base.value(x, y));
    CHECK(err <= 2.0 * delta / 0.5);
    if (step > 0) CHECK(err <= prev + 1e-7);
    prev = err;
  }
}

TEST_CASE("psd gate") {
  // Small mollified-log window: positive definite.
  auto base = CovarianceKernel::pure_log(2);
  RegularizedKernel reg(base, RegularizationSpec::mollify(0.05));
  std::vector<Vec> pts;
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      pts.push_back({0.25 + 0.5 * i / 15.0, 0.25 + 0.5 * j / 15.0, 0.0});
  auto cov = [&](const Vec& a, const Vec& b) { return reg.value(a, b); };
  auto rep = psd_validate(cov, pts);
  CHECK(rep.pass);
  CHECK(rep.min_eigenvalue > -1e-8 * rep.max_eigenvalue);

  // Same kernel stretched over diameter 3: the log goes deeply negative and
  // the matrix loses positivity.
  std::vector<Vec> wide;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      wide.push_back({3.0 * i / 11.0, 3.0 * j / 11.0, 0.0});
  auto rep2 = psd_validate(cov, wide);
  CHECK_FALSE(rep2.pass);

  // Spectral kernel on grid points is a Gram matrix: always PSD.
  auto gff = CovarianceKernel::gff_square(16);
  RegularizedKernel rgff(gff, RegularizationSpec::spectral(16));
  std::vector<Vec> inner;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      inner.push_back({0.2 + 0.6 * i / 9.0, 0.2 + 0.6 * j / 9.0, 0.0});
  auto covg = [&](const Vec& a, const Vec& b) { return rgff.value(a, b); };
  CHECK(psd_validate(covg, inner).pass);
}

TEST_CASE("grid tools match direct evaluation") {
  Grid g = build_grid(2, 32, 1.0);
  auto K = CovarianceKernel::gff_square(16);
  GffGridTools tools(g, K, 16);
  auto ws = tools.make_workspace();
  RegularizedKernel reg(K, RegularizationSpec::spectral(16));

  std::vector<double> row(g.total_points());
  const std::int64_t p = g.index({5, 20, 0});
  tools.covariance_row(p, ws, row);
  for (std::int64_t q : {g.index({5, 20, 0}), g.index({0, 0, 0}),
                         g.index({17, 9, 0}), g.index({31, 31, 0})}) {
    CHECK(row[q] ==
          doctest::Approx(reg.value(g.point(p), g.point(q)))
              .epsilon(1e-10)
              .scale(1.0));
  }

  auto var = tools.variance_profile();
  for (std::int64_t q :
       {g.index({0, 0, 0}), g.index({16, 16, 0}), g.index({3, 27, 0})}) {
    CHECK(var[q] ==
          doctest::Approx(reg.sigma2(g.point(q))).epsilon(1e-10).scale(1.0));
  }

  // Synthesis agrees with the naive mode sum.
  std::vector<double> modes(16 * 16, 0.0);
  Rng rng({31, 0});
  for (auto& m : modes) m = rng.gaussian();
  std::vector<double> field(g.total_points());
  tools.synthesize(modes, ws, field);
  for (std::int64_t q : {g.index({7, 3, 0}), g.index({20, 25, 0})}) {
    Vec x = g.point(q);
    double s = 0.0;
    for (int j = 1; j <= 16; ++j)
      for (int l = 1; l <= 16; ++l)
        s += modes[(j - 1) * 16 + (l - 1)] * 2.0 * std::sin(M_PI * j * x[0]) *
             std::sin(M_PI * l * x[1]);
    CHECK(field[q] == doctest::Approx(s).epsilon(1e-10).scale(1.0));
  }
}
