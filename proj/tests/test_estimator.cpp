#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "imclab/estimator.hpp"
#include "imclab/sampler.hpp"

using namespace imclab;

namespace {

ChaosSample unit_chaos(const Grid& grid) {
  ChaosSample mu;
  mu.grid = grid;
  mu.values.assign(grid.total_points(), {1.0, 0.0});
  mu.beta = 0.0;
  return mu;
}

ChaosSample smooth_fake_chaos(const Grid& grid, double beta) {
  // Deterministic smooth phase field, useful wherever only the estimator's
  // quadrature is under test.
  ChaosSample mu;
  mu.grid = grid;
  mu.beta = beta;
  mu.values.resize(grid.total_points());
  for (std::int64_t i = 0; i < grid.total_points(); ++i) {
    Vec x = grid.point(i);
    double phase = std::sin(2 * M_PI * x[0]) + 0.7 * std::cos(M_PI * x[1]);
    if (grid.dim == 3) phase += 0.4 * std::sin(M_PI * x[2]);
    mu.values[i] = std::exp(std::complex<double>(0.0, beta * phase));
  }
  return mu;
}

}  // namespace

TEST_CASE("scale rules") {
  auto de = paper_double_exp_scales(2.0, 3);
  REQUIRE(de.size() == 3);
  CHECK(de[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(de[1] == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(de[2] == doctest::Approx(0.00390625).epsilon(1e-15));

  auto ge = geometric_scales(0.2, 0.5, 4);
  REQUIRE(ge.size() == 4);
  CHECK(ge[3] == doctest::Approx(0.025).epsilon(1e-15));
  CHECK_THROWS_AS(paper_double_exp_scales(0.9, 2), InvalidArgument);
  CHECK_THROWS_AS(geometric_scales(0.2, 1.1, 2), InvalidArgument);
}

TEST_CASE("running average") {
  std::vector<std::complex<double>> h = {{1.0, 0.0}, {3.0, 2.0}, {2.0, -2.0}};
  CHECK(compute_A_N(h, 1) == std::complex<double>(1.0, 0.0));
  CHECK(std::abs(compute_A_N(h, 2) - std::complex<double>(2.0, 1.0)) <=
        1e-15);
  CHECK(std::abs(compute_A_N(h, 3) - std::complex<double>(2.0, 0.0)) <=
        1e-15);
  CHECK_THROWS_AS(compute_A_N(h, 4), InvalidArgument);
  // All scales equal: the average is that value exactly.
  std::vector<std::complex<double>> flat(5, {1.25, -0.5});
  CHECK(compute_A_N(flat, 5) == std::complex<double>(1.25, -0.5));
}

TEST_CASE("degenerate chaos gives a near-null estimate") {
  Grid g = build_grid(2, 64, 1.0);
  auto K = CovarianceKernel::pure_log(2);
  TestFunction tf(2, {0.5, 0.5, 0.0}, 0.15);
  EstimatorConfig cfg;
  cfg.beta = 0.0;
  cfg.scales = {0.1};
  cfg.weight = WeightMode::ExactC;
  HEstimator est(g, nullptr, tf, cfg, {&K, nullptr, nullptr});

  auto mu = unit_chaos(g);
  auto fs = sample_on_grid(tf, g);
  double l1 = 0.0;
  for (double v : fs) l1 += std::abs(v) * g.cell_volume();
  const auto H = est.h_eta(mu, 0);
  CHECK(std::abs(H) <= 10.0 * g.spacing * g.spacing * l1 / 0.1);
}

TEST_CASE("amplitude linearity and conjugation symmetry") {
  Grid g = build_grid(2, 64, 1.0);
  auto K = CovarianceKernel::pure_log(2);
  EstimatorConfig cfg;
  cfg.beta = 0.5;
  cfg.scales = {0.12};
  cfg.weight = WeightMode::ExactC;
  TestFunction tf(2, {0.5, 0.5, 0.0}, 0.15, 1.0);
  TestFunction tf2(2, {0.5, 0.5, 0.0}, 0.15, 2.0);
  HEstimator est(g, nullptr, tf, cfg, {&K, nullptr, nullptr});
  HEstimator est2(g, nullptr, tf2, cfg, {&K, nullptr, nullptr});

  auto mu = smooth_fake_chaos(g, 0.5);
  const auto H = est.h_eta(mu, 0);
  CHECK(std::abs(est2.h_eta(mu, 0) - 2.0 * H) <= 1e-12 * std::abs(H));

  // Conjugating the chaos conjugates the estimate: real coefficients only.
  ChaosSample conj_mu = mu;
  for (auto& v : conj_mu.values) v = std::conj(v);
  CHECK(std::abs(est.h_eta(conj_mu, 0) - std::conj(H)) <=
        1e-13 * std::abs(H));
}

TEST_CASE("direct and convolution paths agree to a tight tolerance") {
  Grid g = build_grid(2, 64, 1.0);
  auto K = CovarianceKernel::pure_log(2);
  TestFunction tf(2, {0.5, 0.5, 0.0}, 0.15);
  EstimatorConfig cfg;
  cfg.beta = 0.7;
  cfg.scales = {0.1};
  cfg.weight = WeightMode::ExactC;
  cfg.path = EstimatorPath::FastConvolution;
  HEstimator est(g, nullptr, tf, cfg, {&K, nullptr, nullptr});

  auto mu = smooth_fake_chaos(g, 0.7);
  const auto direct = est.h_eta_direct(mu, 0);
  const auto fast = est.h_eta_fast(mu, 0);
  CHECK(std::abs(direct - fast) <= 1e-10 * std::max(1.0, std::abs(direct)));
  CHECK(est.h_eta(mu, 0) == fast);

  // Constant chaos: the odd annulus kernel integrates to zero on both paths.
  auto ones = unit_chaos(g);
  CHECK(std::abs(est.h_eta_direct(ones, 0)) <= 1e-12);
  CHECK(std::abs(est.h_eta_fast(ones, 0)) <= 1e-12);
}

TEST_CASE("annulus locality") {
  Grid g = build_grid(2, 64, 1.0);
  auto K = CovarianceKernel::pure_log(2);
  TestFunction tf(2, {0.4, 0.4, 0.0}, 0.12);
  EstimatorConfig cfg;
  cfg.beta = 0.6;
  cfg.scales = {0.1};
  cfg.weight = WeightMode::ExactC;
  HEstimator est(g, nullptr, tf, cfg, {&K, nullptr, nullptr});

  auto mu = smooth_fake_chaos(g, 0.6);
  const auto H = est.h_eta(mu, 0);

  auto touched = est.touched_indices(0);
  std::vector<char> is_touched(g.total_points(), 0);
  for (auto i : touched) is_touched[i] = 1;
  ChaosSample perturbed = mu;
  std::int64_t changed = 0;
  for (std::int64_t i = 0; i < g.total_points(); ++i) {
    if (!is_touched[i]) {
      perturbed.values[i] = std::polar(3.0, 1.7);
      ++changed;
    }
  }
  REQUIRE(changed > 0);
  CHECK(std::abs(est.h_eta(perturbed, 0) - H) <= 1e-12);
}

TEST_CASE("validation failures") {
  Grid g = build_grid(2, 64, 1.0);
  auto K = CovarianceKernel::pure_log(2);
  TestFunction tf(2, {0.5, 0.5, 0.0}, 0.15);

  EstimatorConfig tiny;
  tiny.scales = {2.5 * g.spacing};
  tiny.weight = WeightMode::ExactC;
  CHECK_THROWS_AS(HEstimator(g, nullptr, tf, tiny, {&K, nullptr, nullptr}),
                  ScaleUnresolved);

  EstimatorConfig unsorted;
  unsorted.scales = {0.05, 0.1};
  unsorted.weight = WeightMode::ExactC;
  CHECK_THROWS_AS(
      HEstimator(g, nullptr, tf, unsorted, {&K, nullptr, nullptr}),
      InvalidArgument);

  EstimatorConfig wide;
  wide.scales = {0.5};
  wide.weight = WeightMode::ExactC;
  CHECK_THROWS_AS(HEstimator(g, nullptr, tf, wide, {&K, nullptr, nullptr}),
                  SupportViolation);

  // Regularized weight at a scale under twice the regularization width.
  RegularizedKernel reg(K, RegularizationSpec::mollify(0.08));
  EstimatorConfig under;
  under.scales = {0.1};
  under.weight = WeightMode::RegularizedC;
  CHECK_THROWS_AS(HEstimator(g, nullptr, tf, under, {nullptr, &reg, nullptr}),
                  ScaleUnresolved);
}

TEST_CASE("strided u-quadrature approximates the full sublattice") {
  Grid g = build_grid(3, 32, 1.0);
  auto K = CovarianceKernel::log_plus_const(3, 0.3);
  TestFunction tf(3, {0.5, 0.5, 0.5}, 0.09);
  auto mu = smooth_fake_chaos(g, 0.5);

  std::complex<double> h[2];
  for (int stride = 1; stride <= 2; ++stride) {
    EstimatorConfig cfg;
    cfg.beta = 0.5;
    cfg.scales = {0.35};
    cfg.weight = WeightMode::ExactC;
    cfg.u_strides = {stride};
    HEstimator est(g, nullptr, tf, cfg, {&K, nullptr, nullptr});
    h[stride - 1] = est.h_eta(mu, 0);
  }
  CHECK(std::abs(h[1] - h[0]) <= 0.1 * std::abs(h[0]));
}

TEST_CASE("error statistics") {
  const double beta = 1.0;
  std::vector<double> truths;
  std::vector<std::complex<double>> perfect, null, noisy;
  Rng rng({314, 0});
  for (int r = 0; r < 2000; ++r) {
    const double t = rng.gaussian();
    truths.push_back(t);
    perfect.push_back({0.0, -beta * t});  // H = -i beta T exactly
    null.push_back({0.0, 0.0});
    noisy.push_back({0.1 * rng.gaussian(), -beta * t + 0.1 * rng.gaussian()});
  }
  auto s1 = reconstruction_error(perfect, truths, beta);
  CHECK(s1.rel_l2 <= 1e-14);
  auto s2 = reconstruction_error(null, truths, beta);
  CHECK(s2.rel_l2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s2.batches >= 10);
  CHECK(s2.stderr_ >= 0.0);

  // Too few replicas for batching: the stderr is flagged, not faked.
  auto s3 = reconstruction_error(
      std::span<const std::complex<double>>(noisy).subspan(0, 10),
      std::span<const double>(truths).subspan(0, 10), beta);
  CHECK(s3.batches == 0);
  CHECK(std::isnan(s3.stderr_));

  CHECK(residual_correlation(noisy, noisy, truths, beta) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(residual_correlation(noisy, null, truths, beta) <= 0.15);

  auto pd = paired_rel_l2_diff(noisy, null, truths, beta);
  CHECK(pd.mean < 0.0);  // noisy tracks the truth, null does not
  CHECK(pd.mean + 2 * pd.stderr_ < 0.0);
}
