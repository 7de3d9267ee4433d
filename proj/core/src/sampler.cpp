#include "imclab/sampler.hpp"

#include <cmath>

namespace imclab {

PointSet PointSet::from_indices(const Grid& grid,
                                std::vector<std::int64_t> indices,
                                std::vector<double> weights) {
  if (indices.size() != weights.size())
    throw InvalidArgument("indices/weights size mismatch");
  PointSet ps;
  ps.grid = grid;
  ps.idx = std::move(indices);
  ps.weight = std::move(weights);
  ps.lookup.reserve(ps.idx.size());
  for (std::size_t i = 0; i < ps.idx.size(); ++i)
    ps.lookup.emplace(ps.idx[i], static_cast<std::int32_t>(i));
  return ps;
}

// ---------------------------------------------------------------------------
// GffSampler

GffSampler::GffSampler(const Grid& grid, const CovarianceKernel& kernel,
                       int truncation) {
  if (grid.dim != 2) throw InvalidArgument("spectral sampler requires d = 2");
  if (truncation > grid.cells / 2)
    throw InvalidArgument("truncation above Nyquist: need J <= n/2");
  tools_ = std::make_shared<GffGridTools>(grid, kernel, truncation);
  variance_ = tools_->variance_profile();
  const int J = truncation;
  mode_sd_.resize(static_cast<std::size_t>(J) * J);
  for (int j = 1; j <= J; ++j)
    for (int l = 1; l <= J; ++l)
      mode_sd_[static_cast<std::size_t>(j - 1) * J + (l - 1)] =
          std::sqrt(kernel.gff_weight(j, l));
}

FieldSample GffSampler::sample(SeedStream seed) const {
  const int J = tools_->truncation();
  Rng rng(seed);
  std::vector<double> modes(static_cast<std::size_t>(J) * J);
  for (std::size_t i = 0; i < modes.size(); ++i)
    modes[i] = mode_sd_[i] * rng.gaussian();

  FieldSample out;
  out.grid = tools_->grid();
  out.values.resize(out.grid.total_points());
  auto ws = tools_->make_workspace();
  tools_->synthesize(modes, ws, out.values);
  out.variance = variance_;
  out.seed = seed;
  out.reg = RegularizationSpec::spectral(J);
  return out;
}

// ---------------------------------------------------------------------------
// CholeskySampler

CholeskySampler::CholeskySampler(
    std::shared_ptr<const PointSet> points,
    const std::function<double(const Vec&, const Vec&)>& cov,
    RegularizationSpec provenance)
    : points_(std::move(points)), reg_(provenance) {
  const auto n = static_cast<Eigen::Index>(points_->size());
  factor_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec xi = points_->position(i);
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = cov(xi, points_->position(j));
      factor_(i, j) = v;
      factor_(j, i) = v;
    }
  }
  variance_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) variance_[i] = factor_(i, i);

  // In-place factorization; one diagonal jitter retry, then fail hard.
  Eigen::MatrixXd saved;
  const double jitter = 1e-10 * factor_.trace() / static_cast<double>(n);
  saved = factor_;
  {
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(factor_);
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      return;
    }
  }
  factor_ = saved;
  saved.resize(0, 0);
  factor_.diagonal().array() += jitter;
  jitter_applied_ = true;
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(factor_);
  if (llt.info() != Eigen::Success)
    throw FactorizationFailure("covariance matrix is not numerically PSD");
  factor_ = llt.matrixL();
}

FieldSample CholeskySampler::sample(SeedStream seed) const {
  const auto n = static_cast<Eigen::Index>(points_->size());
  Rng rng(seed);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.gaussian();
  Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>() * z;

  FieldSample out;
  out.grid = points_->grid;
  out.points = points_;
  out.values.assign(v.data(), v.data() + n);
  out.variance = variance_;
  out.seed = seed;
  out.reg = reg_;
  return out;
}

// ---------------------------------------------------------------------------
// Pairings

double pairing(const FieldSample& field, const TestFunction& tf) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < field.size(); ++i)
    acc += field.values[i] * tf.value(field.position(i)) *
           field.point_weight(i);
  return acc;
}

double grad_pairing(const FieldSample& field, const TestFunction& tf, int k) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < field.size(); ++i)
    acc += field.values[i] * tf.partial(field.position(i), k) *
           field.point_weight(i);
  return -acc;
}

}  // namespace imclab
