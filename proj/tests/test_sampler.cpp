#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "imclab/covariance.hpp"
#include "imclab/sampler.hpp"

using namespace imclab;

namespace {

std::shared_ptr<const PointSet> small_point_set(const Grid& g,
                                                std::vector<Vec> pts) {
  std::vector<std::int64_t> idx;
  std::vector<double> w;
  for (const auto& p : pts) {
    idx.push_back(g.nearest_index(p));
    w.push_back(g.cell_volume());
  }
  return std::make_shared<PointSet>(
      PointSet::from_indices(g, std::move(idx), std::move(w)));
}

}  // namespace

TEST_CASE("spectral sampler determinism") {
  Grid g = build_grid(2, 32, 1.0);
  auto K = CovarianceKernel::gff_square(16);
  GffSampler sampler(g, K, 16);
  auto a = sampler.sample({42, 7});
  auto b = sampler.sample({42, 7});
  auto c = sampler.sample({42, 8});
  REQUIRE(a.values.size() == b.values.size());
  bool identical = true, differs = false;
  for (size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] != b.values[i]) identical = false;
    if (a.values[i] != c.values[i]) differs = true;
  }
  CHECK(identical);
  CHECK(differs);
  CHECK(a.variance.size() == a.values.size());
}

TEST_CASE("spectral sampler moments match the truncated kernel") {
  Grid g = build_grid(2, 32, 1.0);
  auto K = CovarianceKernel::gff_square(16);
  GffSampler sampler(g, K, 16);
  RegularizedKernel reg(K, RegularizationSpec::spectral(16));

  const int R = 10000;
  const std::int64_t probes[5] = {g.index({8, 8, 0}), g.index({16, 16, 0}),
                                  g.index({24, 9, 0}), g.index({5, 26, 0}),
                                  g.index({20, 20, 0})};
  std::vector<double> mean(5, 0.0), m2(5, 0.0), m3(5, 0.0), m4(5, 0.0);
  double cross01 = 0.0, cross23 = 0.0;
  for (int r = 0; r < R; ++r) {
    auto f = sampler.sample({1234, static_cast<std::uint64_t>(r)});
    for (int p = 0; p < 5; ++p) {
      const double v = f.values[probes[p]];
      mean[p] += v;
      m2[p] += v * v;
      m3[p] += v * v * v;
      m4[p] += v * v * v * v;
    }
    cross01 += f.values[probes[0]] * f.values[probes[1]];
    cross23 += f.values[probes[2]] * f.values[probes[3]];
  }
  for (int p = 0; p < 5; ++p) {
    mean[p] /= R;
    m2[p] /= R;
    m3[p] /= R;
    m4[p] /= R;
    const double var = reg.sigma2(g.point(probes[p]));
    // Mean: z-test at 4 sigma. Variance of the sample mean is var/R.
    CHECK(std::abs(mean[p]) <= 4.0 * std::sqrt(var / R));
    // Variance: sample second moment vs exact, 4 sigma with kurtosis 3.
    CHECK(std::abs(m2[p] - var) <= 4.0 * var * std::sqrt(2.0 / R));
    // Gaussianity at the probe: skewness and excess kurtosis near zero.
    const double sd = std::sqrt(m2[p] - mean[p] * mean[p]);
    const double skew = (m3[p] - 3 * mean[p] * m2[p] +
                         2 * mean[p] * mean[p] * mean[p]) /
                        (sd * sd * sd);
    const double kurt = m4[p] / (m2[p] * m2[p]) - 3.0;
    CHECK(std::abs(skew) <= 0.1);
    CHECK(std::abs(kurt) <= 0.2);
  }
  // Two-point function against C_J at two pairs.
  const double c01 = reg.value(g.point(probes[0]), g.point(probes[1]));
  const double c23 = reg.value(g.point(probes[2]), g.point(probes[3]));
  const double v0 = reg.sigma2(g.point(probes[0]));
  const double v1 = reg.sigma2(g.point(probes[1]));
  CHECK(std::abs(cross01 / R - c01) <=
        4.0 * std::sqrt((v0 * v1 + c01 * c01) / R));
  const double v2 = reg.sigma2(g.point(probes[2]));
  const double v3 = reg.sigma2(g.point(probes[3]));
  CHECK(std::abs(cross23 / R - c23) <=
        4.0 * std::sqrt((v2 * v3 + c23 * c23) / R));
}

TEST_CASE("cholesky sampler single point has the prescribed law") {
  Grid g = build_grid(2, 32, 1.0);
  auto ps = small_point_set(g, {{0.5, 0.5, 0.0}});
  auto cov = [](const Vec&, const Vec&) { return 4.0; };
  CholeskySampler sampler(ps, cov, RegularizationSpec::mollify(0.05));
  const int R = 10000;
  double mean = 0, m2 = 0;
  for (int r = 0; r < R; ++r) {
    auto f = sampler.sample({77, static_cast<std::uint64_t>(r)});
    REQUIRE(f.values.size() == 1);
    CHECK(f.variance[0] == doctest::Approx(4.0));
    mean += f.values[0];
    m2 += f.values[0] * f.values[0];
  }
  mean /= R;
  m2 /= R;
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(4.0 / R));
  CHECK(std::abs(m2 - 4.0) <= 4.0 * 4.0 * std::sqrt(2.0 / R));
}

TEST_CASE("cholesky sampler handles duplicate points via jitter") {
  Grid g = build_grid(2, 32, 1.0);
  std::vector<std::int64_t> idx = {g.index({10, 10, 0}), g.index({10, 10, 0})};
  auto ps = std::make_shared<PointSet>(PointSet::from_indices(
      g, std::move(idx), {g.cell_volume(), g.cell_volume()}));
  auto cov = [](const Vec&, const Vec&) { return 4.0; };
  CholeskySampler sampler(ps, cov, RegularizationSpec::mollify(0.05));
  CHECK(sampler.jitter_applied());
  for (int r = 0; r < 20; ++r) {
    auto f = sampler.sample({5, static_cast<std::uint64_t>(r)});
    // Coincident points: values equal up to the jitter scale.
    CHECK(std::abs(f.values[0] - f.values[1]) <= 1e-3);
  }
}

TEST_CASE("cholesky sampler empirical covariance matrix") {
  Grid g = build_grid(2, 64, 1.0);
  std::vector<Vec> pts;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      pts.push_back({0.4 + 0.2 * i / 7.0, 0.4 + 0.2 * j / 7.0, 0.0});
  auto ps = small_point_set(g, pts);
  auto base = CovarianceKernel::pure_log(2);
  RegularizedKernel reg(base, RegularizationSpec::mollify(0.05));
  auto cov = [&](const Vec& a, const Vec& b) { return reg.value(a, b); };
  CholeskySampler sampler(ps, cov, RegularizationSpec::mollify(0.05));

  const int n = static_cast<int>(ps->size());
  const int R = 10000;
  std::vector<double> emp(n * n, 0.0);
  for (int r = 0; r < R; ++r) {
    auto f = sampler.sample({99, static_cast<std::uint64_t>(r)});
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) emp[i * n + j] += f.values[i] * f.values[j];
  }
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double target = cov(ps->position(i), ps->position(j));
      const double d = emp[i * n + j] / R - target;
      const double w = (i == j) ? 1.0 : 2.0;
      num += w * d * d;
      den += w * target * target;
    }
  CHECK(std::sqrt(num / den) <= 0.05);
}

TEST_CASE("pairing and gradient pairing") {
  Grid g = build_grid(2, 64, 1.0);
  auto K = CovarianceKernel::gff_square(16);
  GffSampler sampler(g, K, 16);
  auto f = sampler.sample({11, 3});
  TestFunction tf(2, {0.5, 0.5, 0.0}, 0.2);

  // Constant field: pairing = c * integral f, gradient pairing ~ 0.
  FieldSample cf = f;
  for (auto& v : cf.values) v = 2.5;
  auto fs = sample_on_grid(tf, g);
  CHECK(pairing(cf, tf) ==
        doctest::Approx(2.5 * quadrature(fs, g)).epsilon(1e-12));
  CHECK(std::abs(grad_pairing(cf, tf, 1)) <= 1e-10);
  CHECK(std::abs(grad_pairing(cf, tf, 2)) <= 1e-10);

  // Linearity in the field.
  FieldSample sum = f;
  for (size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += cf.values[i];
  CHECK(grad_pairing(sum, tf, 1) ==
        doctest::Approx(grad_pairing(f, tf, 1) + grad_pairing(cf, tf, 1))
            .epsilon(1e-12)
            .scale(1e-12));
}

TEST_CASE("field io round trip") {
  Grid g = build_grid(2, 32, 1.0);
  auto K = CovarianceKernel::gff_square(16);
  GffSampler sampler(g, K, 16);
  auto f = sampler.sample({13, 5});
  const std::string path = "field_roundtrip.bin";
  save_field(f, path);
  auto f2 = load_field(path);
  std::remove(path.c_str());
  REQUIRE(f2.values.size() == f.values.size());
  bool same = f2.grid.dim == f.grid.dim && f2.grid.cells == f.grid.cells &&
              f2.seed.master == f.seed.master &&
              f2.seed.replica == f.seed.replica;
  for (size_t i = 0; i < f.values.size(); ++i) {
    same = same && f2.values[i] == f.values[i] &&
           f2.variance[i] == f.variance[i];
  }
  CHECK(same);
}
