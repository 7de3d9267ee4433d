#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "imclab/grid.hpp"
#include "imclab/mollifier.hpp"

namespace imclab {

enum class KernelKind { PureLog, GffSquare, LogPlusG, Constant };

/// Smooth additive part g(x,y) with closed-form first partials. No numerical
/// differentiation of user kernels happens anywhere downstream.
struct SmoothOffset {
  std::function<double(const Vec&, const Vec&)> value;
  std::function<double(const Vec&, const Vec&)> d_x1;
  std::function<double(const Vec&, const Vec&)> d_y1;
  bool translation_invariant = false;
  std::optional<double> constant;  // set when g is a constant
};

/// Covariance C(x,y) = -log|x-y| + g(x,y) in its concrete instantiations.
/// GffSquare is the sine eigenexpansion on the unit square truncated at J,
/// normalized so the short-distance behavior carries coefficient 1 on the log.
class CovarianceKernel {
 public:
  static CovarianceKernel pure_log(int dim);
  static CovarianceKernel gff_square(int truncation);
  static CovarianceKernel log_plus_g(int dim, SmoothOffset g);
  static CovarianceKernel log_plus_const(int dim, double g0);
  static CovarianceKernel constant(int dim, double c);

  KernelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int truncation() const { return truncation_; }

  double value(const Vec& x, const Vec& y) const;

  enum class Slot { X1, Y1 };
  double partial(const Vec& x, const Vec& y, Slot which) const;

  /// True when C(x,y) depends on x-y only (so fast-convolution weights and
  /// radial tables apply).
  bool translation_invariant() const;
  /// g(x,y) = C(x,y) + log|x-y|; zero for the pure log kernel. Not available
  /// for the spectral square kernel.
  double smooth_part(const Vec& x, const Vec& y) const;
  /// Value at |x-y| = r for translation-invariant kinds.
  double radial_value(double r) const;

  double gff_weight(int j, int l) const;

  /// Returns a copy whose every value is shifted by `offset` (fault injection
  /// for negative-control tests).
  CovarianceKernel with_offset(double offset) const;
  double injected_offset() const { return debug_offset_; }

 private:
  CovarianceKernel() = default;
  KernelKind kind_ = KernelKind::PureLog;
  int dim_ = 2;
  int truncation_ = 0;
  SmoothOffset g_;
  double const_value_ = 0.0;
  double debug_offset_ = 0.0;
};

struct RegularizationSpec {
  enum class Mode { SpectralTruncation, MollifyConvolution };
  Mode mode = Mode::SpectralTruncation;
  int truncation = 0;  // SpectralTruncation
  double delta = 0.0;  // MollifyConvolution

  double effective_delta() const {
    return mode == Mode::SpectralTruncation ? 1.0 / truncation : delta;
  }
  static RegularizationSpec spectral(int J) {
    return {Mode::SpectralTruncation, J, 0.0};
  }
  static RegularizationSpec mollify(double delta) {
    return {Mode::MollifyConvolution, 0, delta};
  }
};

/// Regularized covariance C_delta, finite on the diagonal. Spectral mode
/// truncates the series exactly; mollify mode convolves the kernel with
/// phi_delta twice (radial table for translation-invariant kernels, local
/// quadrature otherwise).
class RegularizedKernel {
 public:
  RegularizedKernel(CovarianceKernel base, RegularizationSpec spec,
                    double table_rmax = 2.0);

  double value(const Vec& x, const Vec& y) const;
  double sigma2(const Vec& x) const { return value(x, x); }
  /// Translation-invariant kernels only.
  double radial(double r) const;

  const CovarianceKernel& base() const { return base_; }
  const RegularizationSpec& spec() const { return spec_; }

 private:
  void build_radial_table(double rmax);
  double mollify_pair_quadrature(const Vec& x, const Vec& y) const;

  CovarianceKernel base_;
  RegularizationSpec spec_;
  Mollifier moll_;
  std::vector<double> table_;  // radial samples, spacing table_dr_
  double table_dr_ = 0.0;
};

struct PsdReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool pass = false;
};

/// Dense eigensolve gate for Cholesky sampling; at most 4096 points.
PsdReport psd_validate(
    const std::function<double(const Vec&, const Vec&)>& cov,
    std::span<const Vec> points);

class DstPlan;

struct DstWorkspace {
  std::vector<double> in, out;
};

/// Grid-resolution helpers for the square-GFF kernel: full covariance rows,
/// the exact variance profile, and synthesis of a field from sine-mode
/// coefficients, all through a fast sine transform.
class GffGridTools {
 public:
  GffGridTools(const Grid& grid, const CovarianceKernel& kernel,
               int truncation);
  ~GffGridTools();
  GffGridTools(const GffGridTools&) = delete;
  GffGridTools& operator=(const GffGridTools&) = delete;

  int truncation() const { return trunc_; }
  const Grid& grid() const { return grid_; }

  DstWorkspace make_workspace() const;

  /// C_J(p, .) over the whole grid, p a grid point.
  void covariance_row(std::int64_t point_idx, DstWorkspace& ws,
                      std::span<double> out) const;

  /// Field sum_{j,l<=J} Y_jl e_jl(x) from mode coefficients Y (J*J,
  /// row-major in j).
  void synthesize(std::span<const double> modes, DstWorkspace& ws,
                  std::span<double> out) const;

  /// Exact variance profile of the synthesized field.
  std::vector<double> variance_profile() const;

 private:
  Grid grid_;
  CovarianceKernel kernel_;
  int trunc_;
  std::unique_ptr<DstPlan> plan_;
  std::vector<double> sin_table_;  // [k*trunc_ + (j-1)] = sin(pi j x_k)
};

}  // namespace imclab
