#include "imclab/covariance.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "fftw_util.hpp"

namespace imclab {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

// ---------------------------------------------------------------------------
// CovarianceKernel

CovarianceKernel CovarianceKernel::pure_log(int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("unsupported dimension");
  CovarianceKernel k;
  k.kind_ = KernelKind::PureLog;
  k.dim_ = dim;
  return k;
}

CovarianceKernel CovarianceKernel::gff_square(int truncation) {
  if (truncation < 1) throw InvalidArgument("truncation must be >= 1");
  CovarianceKernel k;
  k.kind_ = KernelKind::GffSquare;
  k.dim_ = 2;
  k.truncation_ = truncation;
  return k;
}

CovarianceKernel CovarianceKernel::log_plus_g(int dim, SmoothOffset g) {
  if (dim != 2 && dim != 3) throw InvalidArgument("unsupported dimension");
  if (!g.value || !g.d_x1 || !g.d_y1)
    throw InvalidArgument("g requires value and both first partials");
  CovarianceKernel k;
  k.kind_ = KernelKind::LogPlusG;
  k.dim_ = dim;
  k.g_ = std::move(g);
  return k;
}

CovarianceKernel CovarianceKernel::log_plus_const(int dim, double g0) {
  SmoothOffset g;
  g.value = [g0](const Vec&, const Vec&) { return g0; };
  g.d_x1 = [](const Vec&, const Vec&) { return 0.0; };
  g.d_y1 = [](const Vec&, const Vec&) { return 0.0; };
  g.translation_invariant = true;
  g.constant = g0;
  return log_plus_g(dim, std::move(g));
}

CovarianceKernel CovarianceKernel::constant(int dim, double c) {
  CovarianceKernel k;
  k.kind_ = KernelKind::Constant;
  k.dim_ = dim;
  k.const_value_ = c;
  return k;
}

CovarianceKernel CovarianceKernel::with_offset(double offset) const {
  CovarianceKernel k = *this;
  k.debug_offset_ += offset;
  return k;
}

double CovarianceKernel::gff_weight(int j, int l) const {
  return 2.0 / (kPi * (static_cast<double>(j) * j + static_cast<double>(l) * l));
}

double CovarianceKernel::value(const Vec& x, const Vec& y) const {
  switch (kind_) {
    case KernelKind::Constant:
      return const_value_ + debug_offset_;
    case KernelKind::PureLog:
    case KernelKind::LogPlusG: {
      const double r = dist(x, y, dim_);
      if (r <= 0.0)
        throw DiagonalSingularity("log kernel evaluated on the diagonal");
      double v = -std::log(r);
      if (kind_ == KernelKind::LogPlusG) v += g_.value(x, y);
      return v + debug_offset_;
    }
    case KernelKind::GffSquare: {
      const int J = truncation_;
      std::vector<double> sx(J), sy(J), tx(J), ty(J);
      for (int j = 1; j <= J; ++j) {
        sx[j - 1] = std::sin(kPi * j * x[0]);
        sy[j - 1] = std::sin(kPi * j * y[0]);
        tx[j - 1] = std::sin(kPi * j * x[1]);
        ty[j - 1] = std::sin(kPi * j * y[1]);
      }
      double total = 0.0;
      for (int j = 1; j <= J; ++j) {
        double inner = 0.0;
        const double jj = static_cast<double>(j) * j;
        for (int l = 1; l <= J; ++l) {
          const double w = 2.0 / (kPi * (jj + static_cast<double>(l) * l));
          inner += w * tx[l - 1] * ty[l - 1];
        }
        total += sx[j - 1] * sy[j - 1] * inner;
      }
      return 4.0 * total + debug_offset_;
    }
  }
  throw InvalidArgument("unknown kernel kind");
}

double CovarianceKernel::partial(const Vec& x, const Vec& y, Slot which) const {
  switch (kind_) {
    case KernelKind::Constant:
      return 0.0;
    case KernelKind::PureLog:
    case KernelKind::LogPlusG: {
      const double r = dist(x, y, dim_);
      if (r <= 0.0)
        throw DiagonalSingularity("log kernel evaluated on the diagonal");
      const double dx1 = x[0] - y[0];
      double v = (which == Slot::X1) ? -dx1 / (r * r) : dx1 / (r * r);
      if (kind_ == KernelKind::LogPlusG)
        v += (which == Slot::X1) ? g_.d_x1(x, y) : g_.d_y1(x, y);
      return v;
    }
    case KernelKind::GffSquare: {
      const int J = truncation_;
      double total = 0.0;
      for (int j = 1; j <= J; ++j) {
        const double jj = static_cast<double>(j) * j;
        const double fx = (which == Slot::X1)
                              ? kPi * j * std::cos(kPi * j * x[0])
                              : std::sin(kPi * j * x[0]);
        const double fy = (which == Slot::Y1)
                              ? kPi * j * std::cos(kPi * j * y[0])
                              : std::sin(kPi * j * y[0]);
        double inner = 0.0;
        for (int l = 1; l <= J; ++l) {
          const double w = 2.0 / (kPi * (jj + static_cast<double>(l) * l));
          inner += w * std::sin(kPi * l * x[1]) * std::sin(kPi * l * y[1]);
        }
        total += fx * fy * inner;
      }
      return 4.0 * total;
    }
  }
  throw InvalidArgument("unknown kernel kind");
}

bool CovarianceKernel::translation_invariant() const {
  switch (kind_) {
    case KernelKind::PureLog:
    case KernelKind::Constant:
      return true;
    case KernelKind::LogPlusG:
      return g_.translation_invariant && g_.constant.has_value();
    case KernelKind::GffSquare:
      return false;
  }
  return false;
}

double CovarianceKernel::smooth_part(const Vec& x, const Vec& y) const {
  switch (kind_) {
    case KernelKind::PureLog:
      return debug_offset_;
    case KernelKind::Constant:
      return const_value_ + debug_offset_;
    case KernelKind::LogPlusG:
      return g_.value(x, y) + debug_offset_;
    case KernelKind::GffSquare:
      throw InvalidArgument(
          "smooth part of the spectral square kernel is not available in "
          "closed form");
  }
  throw InvalidArgument("unknown kernel kind");
}

double CovarianceKernel::radial_value(double r) const {
  if (!translation_invariant())
    throw InvalidArgument("kernel is not translation invariant");
  if (kind_ == KernelKind::Constant) return const_value_ + debug_offset_;
  if (r <= 0.0)
    throw DiagonalSingularity("log kernel evaluated on the diagonal");
  double v = -std::log(r);
  if (kind_ == KernelKind::LogPlusG) v += *g_.constant;
  return v + debug_offset_;
}

// ---------------------------------------------------------------------------
// RegularizedKernel

RegularizedKernel::RegularizedKernel(CovarianceKernel base,
                                     RegularizationSpec spec, double table_rmax)
    : base_(std::move(base)), spec_(spec), moll_(base_.dim()) {
  if (spec_.mode == RegularizationSpec::Mode::SpectralTruncation) {
    if (base_.kind() != KernelKind::GffSquare)
      throw InvalidArgument("spectral truncation requires the square GFF");
    if (spec_.truncation < 1 || spec_.truncation > base_.truncation())
      throw InvalidArgument("spectral truncation out of range");
  } else {
    if (spec_.delta <= 0.0) throw InvalidArgument("delta must be positive");
    if (base_.translation_invariant() && base_.kind() != KernelKind::Constant)
      build_radial_table(table_rmax);
  }
}

double RegularizedKernel::value(const Vec& x, const Vec& y) const {
  if (spec_.mode == RegularizationSpec::Mode::SpectralTruncation) {
    const int J = spec_.truncation;
    double total = 0.0;
    for (int j = 1; j <= J; ++j) {
      const double jj = static_cast<double>(j) * j;
      double inner = 0.0;
      for (int l = 1; l <= J; ++l) {
        const double w = 2.0 / (kPi * (jj + static_cast<double>(l) * l));
        inner += w * std::sin(kPi * l * x[1]) * std::sin(kPi * l * y[1]);
      }
      total += std::sin(kPi * j * x[0]) * std::sin(kPi * j * y[0]) * inner;
    }
    // Keep any fault-injection offset visible through the truncation.
    return 4.0 * total + base_.injected_offset();
  }
  if (!table_.empty()) return radial(dist(x, y, base_.dim()));
  return mollify_pair_quadrature(x, y);
}

double RegularizedKernel::radial(double r) const {
  if (table_.empty())
    throw InvalidArgument("no radial table for this kernel/spec");
  const double t = r / table_dr_;
  const auto n = static_cast<std::ptrdiff_t>(table_.size());
  const auto i = static_cast<std::ptrdiff_t>(std::floor(t));
  if (i >= n - 2) return base_.radial_value(r);  // beyond table: unregularized
  const double u = t - static_cast<double>(i);
  // Catmull-Rom through the four surrounding samples.
  const double p0 = table_[std::max<std::ptrdiff_t>(i - 1, 0)];
  const double p1 = table_[i];
  const double p2 = table_[i + 1];
  const double p3 = table_[i + 2];
  return p1 + 0.5 * u *
                  (p2 - p0 +
                   u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                        u * (3.0 * (p1 - p2) + p3 - p0)));
}

void RegularizedKernel::build_radial_table(double rmax) {
  const int d = base_.dim();
  const double delta = spec_.delta;

  // Autocorrelation psi = phi_delta * phi_delta(-.) on a radial table.
  const double psi_dr = delta / 64.0;
  const int psi_n = static_cast<int>(std::ceil(2.0 * delta / psi_dr)) + 2;
  std::vector<double> psi(psi_n, 0.0);
  const double astep = delta / 24.0;
  const int am = static_cast<int>(std::ceil(delta / astep));
  for (int k = 0; k < psi_n; ++k) {
    const double s = k * psi_dr;
    double acc = 0.0;
    Vec a = {0, 0, 0}, b = {0, 0, 0};
    for (int i0 = -am; i0 <= am; ++i0)
      for (int i1 = -am; i1 <= am; ++i1) {
        const int i2max = (d == 3) ? am : 0;
        for (int i2 = -i2max; i2 <= i2max; ++i2) {
          a[0] = (i0 + 0.5) * astep;
          a[1] = (i1 + 0.5) * astep;
          a[2] = (d == 3) ? (i2 + 0.5) * astep : 0.0;
          const double pa = moll_.value_scaled(delta, a);
          if (pa == 0.0) continue;
          b = a;
          b[0] -= s;
          acc += pa * moll_.value_scaled(delta, b);
        }
      }
    psi[k] = acc * std::pow(astep, d);
  }
  const auto psi_at = [&](double s) {
    const double t = s / psi_dr;
    const auto i = static_cast<std::ptrdiff_t>(std::floor(t));
    if (i < 0 || i >= psi_n - 1) return 0.0;
    const double u = t - static_cast<double>(i);
    return psi[i] * (1.0 - u) + psi[i + 1] * u;
  };

  // C_delta(r) = int psi(|w|) Cbase(|r e1 - w|) dw over |w| <= 2 delta.
  table_dr_ = delta / 16.0;
  const int rn = static_cast<int>(std::ceil(rmax / table_dr_)) + 4;
  table_.assign(rn, 0.0);
  const double wstep = delta / 12.0;
  const int wm = static_cast<int>(std::ceil(2.0 * delta / wstep));
  struct Node {
    Vec w;
    double psi;
  };
  std::vector<Node> nodes;
  for (int i0 = -wm; i0 <= wm; ++i0)
    for (int i1 = -wm; i1 <= wm; ++i1) {
      const int i2max = (d == 3) ? wm : 0;
      for (int i2 = -i2max; i2 <= i2max; ++i2) {
        Vec w = {(i0 + 0.5) * wstep, (i1 + 0.5) * wstep,
                 (d == 3) ? (i2 + 0.5) * wstep : 0.0};
        const double p = psi_at(norm(w, d));
        if (p != 0.0) nodes.push_back({w, p});
      }
    }
  const double wvol = std::pow(wstep, d);
  // Renormalize the discrete measure to unit mass so that a constant kernel
  // is reproduced exactly and no O((wstep/delta)^2) mass defect leaks into
  // every covariance value.
  double mass = 0.0;
  for (const auto& nd : nodes) mass += nd.psi;
  mass *= wvol;
  for (int k = 0; k < rn; ++k) {
    const double r = k * table_dr_;
    double acc = 0.0;
    for (const auto& nd : nodes) {
      Vec z = nd.w;
      z[0] -= r;
      const double zr = norm(z, d);
      if (zr <= 0.0) continue;  // cell-centered lattice keeps this unreachable
      acc += nd.psi * base_.radial_value(zr);
    }
    table_[k] = acc * wvol / mass;
  }
}

double RegularizedKernel::mollify_pair_quadrature(const Vec& x,
                                                  const Vec& y) const {
  const int d = base_.dim();
  const double delta = spec_.delta;
  const double step = delta / 10.0;
  const int m = static_cast<int>(std::ceil(delta / step));
  struct Node {
    Vec p;
    double phi;
  };
  // Half-step shift on the second lattice dodges exact s == t coincidences.
  const auto lattice = [&](const Vec& c, double shift) {
    std::vector<Node> nodes;
    for (int i0 = -m; i0 <= m; ++i0)
      for (int i1 = -m; i1 <= m; ++i1) {
        const int i2max = (d == 3) ? m : 0;
        for (int i2 = -i2max; i2 <= i2max; ++i2) {
          Vec off = {(i0 + 0.5 + shift) * step, (i1 + 0.5 + shift) * step,
                     (d == 3) ? (i2 + 0.5 + shift) * step : 0.0};
          const double phi = moll_.value_scaled(delta, off);
          if (phi == 0.0) continue;
          Vec p = c;
          for (int k = 0; k < d; ++k) p[k] -= off[k];
          nodes.push_back({p, phi});
        }
      }
    return nodes;
  };
  const auto sx = lattice(x, 0.0);
  const auto ty = lattice(y, 0.25);
  // Unit-mass renormalization of both discrete mollifiers (see the radial
  // table construction).
  double mass_s = 0.0, mass_t = 0.0;
  for (const auto& s : sx) mass_s += s.phi;
  for (const auto& t : ty) mass_t += t.phi;
  double acc = 0.0;
  for (const auto& s : sx)
    for (const auto& t : ty) acc += s.phi * t.phi * base_.value(s.p, t.p);
  return acc / (mass_s * mass_t);
}

// ---------------------------------------------------------------------------
// PSD gate

PsdReport psd_validate(
    const std::function<double(const Vec&, const Vec&)>& cov,
    std::span<const Vec> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n > 4096) throw InvalidArgument("psd_validate limited to 4096 points");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = cov(points[i], points[j]);
      m(i, j) = v;
      m(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                    Eigen::EigenvaluesOnly);
  PsdReport rep;
  rep.min_eigenvalue = es.eigenvalues().minCoeff();
  rep.max_eigenvalue = es.eigenvalues().maxCoeff();
  rep.pass = rep.min_eigenvalue >= -1e-8 * std::abs(rep.max_eigenvalue);
  return rep;
}

// ---------------------------------------------------------------------------
// GffGridTools

class DstPlan {
 public:
  explicit DstPlan(int n) : n_(n) {
    std::scoped_lock lock(detail::fftw_planner_mutex());
    std::vector<double> tmp_in(static_cast<size_t>(n) * n),
        tmp_out(static_cast<size_t>(n) * n);
    plan_ = fftw_plan_r2r_2d(n, n, tmp_in.data(), tmp_out.data(),
                             FFTW_RODFT01, FFTW_RODFT01,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~DstPlan() {
    std::scoped_lock lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute(double* in, double* out) const {
    fftw_execute_r2r(plan_, in, out);
  }
  int size() const { return n_; }

 private:
  int n_;
  fftw_plan plan_;
};

GffGridTools::GffGridTools(const Grid& grid, const CovarianceKernel& kernel,
                           int truncation)
    : grid_(grid), kernel_(kernel), trunc_(truncation) {
  if (grid.dim != 2) throw InvalidArgument("square GFF tools require d = 2");
  if (std::abs(grid.side - 1.0) > 1e-15)
    throw InvalidArgument("square GFF tools require the unit square");
  if (kernel.kind() != KernelKind::GffSquare)
    throw InvalidArgument("kernel is not the square GFF");
  if (trunc_ < 1 || trunc_ > grid.cells)
    throw InvalidArgument("truncation must lie in [1, n]");
  plan_ = std::make_unique<DstPlan>(grid.cells);
  sin_table_.resize(static_cast<size_t>(grid.cells) * trunc_);
  for (int k = 0; k < grid.cells; ++k) {
    const double xk = (k + 0.5) * grid.spacing;
    for (int j = 1; j <= trunc_; ++j)
      sin_table_[static_cast<size_t>(k) * trunc_ + (j - 1)] =
          std::sin(kPi * j * xk);
  }
}

GffGridTools::~GffGridTools() = default;

DstWorkspace GffGridTools::make_workspace() const {
  const auto total = static_cast<size_t>(grid_.cells) * grid_.cells;
  DstWorkspace ws;
  ws.in.assign(total, 0.0);
  ws.out.assign(total, 0.0);
  return ws;
}

void GffGridTools::covariance_row(std::int64_t point_idx, DstWorkspace& ws,
                                  std::span<double> out) const {
  const int n = grid_.cells;
  const auto c = grid_.coords(point_idx);
  std::fill(ws.in.begin(), ws.in.end(), 0.0);
  const double* s1 = &sin_table_[static_cast<size_t>(c[0]) * trunc_];
  const double* s2 = &sin_table_[static_cast<size_t>(c[1]) * trunc_];
  for (int j = 1; j <= trunc_; ++j) {
    const double jj = static_cast<double>(j) * j;
    double* row = &ws.in[static_cast<size_t>(j - 1) * n];
    for (int l = 1; l <= trunc_; ++l) {
      const double w = 2.0 / (kPi * (jj + static_cast<double>(l) * l));
      row[l - 1] = w * s1[j - 1] * s2[l - 1];
    }
  }
  plan_->execute(ws.in.data(), ws.out.data());
  std::copy(ws.out.begin(), ws.out.end(), out.begin());
}

void GffGridTools::synthesize(std::span<const double> modes, DstWorkspace& ws,
                              std::span<double> out) const {
  const int n = grid_.cells;
  std::fill(ws.in.begin(), ws.in.end(), 0.0);
  for (int j = 1; j <= trunc_; ++j) {
    const double* src = &modes[static_cast<size_t>(j - 1) * trunc_];
    double* row = &ws.in[static_cast<size_t>(j - 1) * n];
    for (int l = 1; l <= trunc_; ++l) row[l - 1] = 0.5 * src[l - 1];
  }
  plan_->execute(ws.in.data(), ws.out.data());
  std::copy(ws.out.begin(), ws.out.end(), out.begin());
}

std::vector<double> GffGridTools::variance_profile() const {
  const int n = grid_.cells;
  const int J = trunc_;
  // inner[j][k2] = sum_l w_jl sin(pi l x_k2)^2
  std::vector<double> inner(static_cast<size_t>(J) * n);
  for (int j = 1; j <= J; ++j) {
    const double jj = static_cast<double>(j) * j;
    for (int k2 = 0; k2 < n; ++k2) {
      const double* s2 = &sin_table_[static_cast<size_t>(k2) * J];
      double acc = 0.0;
      for (int l = 1; l <= J; ++l) {
        const double w = 2.0 / (kPi * (jj + static_cast<double>(l) * l));
        acc += w * s2[l - 1] * s2[l - 1];
      }
      inner[static_cast<size_t>(j - 1) * n + k2] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(n) * n);
  for (int k1 = 0; k1 < n; ++k1) {
    const double* s1 = &sin_table_[static_cast<size_t>(k1) * J];
    for (int k2 = 0; k2 < n; ++k2) {
      double acc = 0.0;
      for (int j = 1; j <= J; ++j)
        acc += s1[j - 1] * s1[j - 1] *
               inner[static_cast<size_t>(j - 1) * n + k2];
      out[static_cast<size_t>(k1) * n + k2] = 4.0 * acc;
    }
  }
  return out;
}

}  // namespace imclab
