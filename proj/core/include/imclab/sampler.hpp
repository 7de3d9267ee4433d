#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <unordered_map>

#include "imclab/covariance.hpp"
#include "imclab/grid.hpp"
#include "imclab/rng.hpp"

namespace imclab {

/// Subset of grid points with per-point quadrature weights. Strided halo
/// points carry the volume of their coarse cell.
struct PointSet {
  Grid grid;
  std::vector<std::int64_t> idx;
  std::vector<double> weight;
  std::unordered_map<std::int64_t, std::int32_t> lookup;

  std::int64_t size() const { return static_cast<std::int64_t>(idx.size()); }
  Vec position(std::int64_t local) const { return grid.point(idx[local]); }
  /// Local index of a grid point, or -1.
  std::int32_t find(std::int64_t grid_idx) const {
    auto it = lookup.find(grid_idx);
    return it == lookup.end() ? -1 : it->second;
  }

  static PointSet from_indices(const Grid& grid,
                               std::vector<std::int64_t> indices,
                               std::vector<double> weights);
};

/// One realization of the regularized field on the grid (or a point subset),
/// with its exact per-point variance profile.
struct FieldSample {
  Grid grid;
  std::shared_ptr<const PointSet> points;  // null: full grid
  std::vector<double> values;
  std::vector<double> variance;
  SeedStream seed;
  RegularizationSpec reg;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  Vec position(std::int64_t i) const {
    return points ? points->position(i) : grid.point(i);
  }
  double point_weight(std::int64_t i) const {
    return points ? points->weight[i] : grid.cell_volume();
  }
};

/// Spectral sampler for the square-GFF: independent centered Gaussian sine
/// modes up to J, synthesized by a fast sine transform, with the exact
/// variance profile attached.
class GffSampler {
 public:
  GffSampler(const Grid& grid, const CovarianceKernel& kernel, int truncation);

  FieldSample sample(SeedStream seed) const;
  const std::vector<double>& variance() const { return variance_; }
  const GffGridTools& tools() const { return *tools_; }

 private:
  std::shared_ptr<GffGridTools> tools_;
  std::vector<double> variance_;
  std::vector<double> mode_sd_;  // sqrt of mode variances, row-major in j
};

/// Dense Cholesky sampler over an explicit point set; the factorization is
/// computed once and shared read-only across replicas.
class CholeskySampler {
 public:
  CholeskySampler(std::shared_ptr<const PointSet> points,
                  const std::function<double(const Vec&, const Vec&)>& cov,
                  RegularizationSpec provenance);

  FieldSample sample(SeedStream seed) const;
  const PointSet& points() const { return *points_; }
  bool jitter_applied() const { return jitter_applied_; }

 private:
  std::shared_ptr<const PointSet> points_;
  Eigen::MatrixXd factor_;  // lower triangular
  std::vector<double> variance_;
  RegularizationSpec reg_;
  bool jitter_applied_ = false;
};

/// quadrature(field * f): the field paired against a test function.
double pairing(const FieldSample& field, const TestFunction& tf);

/// -quadrature(field * d_k f): ground truth for the gradient pairing.
double grad_pairing(const FieldSample& field, const TestFunction& tf, int k);

/// Binary cache of a field sample (little-endian, fixed layout).
void save_field(const FieldSample& field, const std::string& path);
FieldSample load_field(const std::string& path);

}  // namespace imclab
