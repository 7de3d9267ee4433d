#include "imclab/estimator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fftw_util.hpp"
#include "imclab/sampler.hpp"

namespace imclab {

std::vector<double> paper_double_exp_scales(double K, int count) {
  if (K <= 1.0) throw InvalidArgument("double-exponential base must exceed 1");
  if (count < 1) throw InvalidArgument("scale count must be >= 1");
  std::vector<double> out(count);
  double e = K;
  for (int n = 0; n < count; ++n) {
    out[n] = std::exp2(-e);
    e *= K;
  }
  return out;
}

std::vector<double> geometric_scales(double eta0, double rho, int count) {
  if (eta0 <= 0.0) throw InvalidArgument("initial scale must be positive");
  if (rho <= 0.0 || rho >= 1.0)
    throw InvalidArgument("geometric ratio must lie in (0, 1)");
  if (count < 1) throw InvalidArgument("scale count must be >= 1");
  std::vector<double> out(count);
  double e = eta0;
  for (int n = 0; n < count; ++n) {
    out[n] = e;
    e *= rho;
  }
  return out;
}

namespace {

// Moves coordinate k (1-based) into slot 0 so the mollifier's d/dx_1 becomes
// d/dx_k; legal because the mollifier is radial.
Vec rotate_to_front(const Vec& z, int k) {
  Vec w = z;
  std::swap(w[0], w[k - 1]);
  return w;
}

}  // namespace

struct HEstimator::Stencil {
  // H = sum_i x_pref[i] * mu[x_local[i]] * sum_p coeff[p] * conj(mu[u_local[p]])
  std::vector<std::int32_t> x_local;
  std::vector<double> x_pref;  // f(x) * h^d
  std::vector<std::int64_t> begin;
  std::vector<std::int32_t> u_local;
  std::vector<double> coeff;  // W * dphi_eta * (stride h)^d
};

struct HEstimator::FastPlan {
  std::vector<std::complex<double>> khat;  // DFT of the annulus kernel
  std::vector<double> pref;                // f(x) * h^d over the full grid
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::int64_t total = 0;

  ~FastPlan() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

HEstimator::HEstimator(const Grid& grid, std::shared_ptr<const PointSet> points,
                       const TestFunction& tf, const EstimatorConfig& cfg,
                       const WeightSources& sources)
    : grid_(grid),
      points_(std::move(points)),
      tf_(tf),
      cfg_(cfg),
      moll_(grid.dim) {
  if (cfg_.scales.empty()) throw InvalidArgument("no estimator scales");
  for (std::size_t s = 0; s < cfg_.scales.size(); ++s) {
    if (cfg_.scales[s] <= 0.0)
      throw InvalidArgument("estimator scales must be positive");
    if (s > 0 && cfg_.scales[s] >= cfg_.scales[s - 1])
      throw InvalidArgument("estimator scales must be strictly decreasing");
  }
  if (cfg_.k < 1 || cfg_.k > grid_.dim)
    throw InvalidArgument("derivative coordinate out of range");
  if (cfg_.u_strides.empty()) {
    cfg_.u_strides.assign(cfg_.scales.size(), 1);
  } else if (cfg_.u_strides.size() != cfg_.scales.size()) {
    throw InvalidArgument("one u-stride per scale required");
  }
  for (int s : cfg_.u_strides)
    if (s < 1) throw InvalidArgument("u-strides must be >= 1");

  const double h = grid_.spacing;
  for (double eta : cfg_.scales) {
    if (eta < cfg_.min_eta_over_h * h)
      throw ScaleUnresolved("scale " + std::to_string(eta) +
                            " below the grid resolution floor");
  }
  switch (cfg_.weight) {
    case WeightMode::ExactC:
      if (!sources.kernel)
        throw InvalidArgument("exact weight mode needs a covariance kernel");
      break;
    case WeightMode::RegularizedC: {
      if (!sources.regularized)
        throw InvalidArgument(
            "regularized weight mode needs a regularized kernel");
      const double delta = sources.regularized->spec().effective_delta();
      for (double eta : cfg_.scales)
        if (eta < cfg_.min_eta_over_delta * delta)
          throw ScaleUnresolved(
              "scale " + std::to_string(eta) +
              " not separated from the regularization scale " +
              std::to_string(delta));
      break;
    }
    case WeightMode::FrozenG:
      if (!sources.kernel)
        throw InvalidArgument("frozen-g weight mode needs a covariance kernel");
      if (sources.kernel->kind() == KernelKind::GffSquare)
        throw InvalidArgument(
            "frozen-g weight is unavailable for the spectral square kernel");
      break;
  }
  // The annulus around every support point must stay inside the domain.
  tf_.require_clearance(grid_, cfg_.scales.front());

  stencils_.resize(cfg_.scales.size());
  fast_plans_.resize(cfg_.scales.size());
  for (int s = 0; s < scale_count(); ++s) {
    build_stencil(s, sources);
    if (cfg_.path == EstimatorPath::FastConvolution) build_fast_plan(s, sources);
  }
}

HEstimator::~HEstimator() = default;

double HEstimator::weight_value(const WeightSources& sources, const Vec& x,
                                const Vec& u,
                                std::span<const double> row) const {
  const double b2 = cfg_.beta * cfg_.beta;
  switch (cfg_.weight) {
    case WeightMode::ExactC: {
      if (!row.empty()) {
        const std::int64_t ui = grid_.nearest_index(u);
        return std::exp(-b2 * row[ui]);
      }
      return std::exp(-b2 * sources.kernel->value(x, u));
    }
    case WeightMode::RegularizedC: {
      if (!row.empty()) {
        const std::int64_t ui = grid_.nearest_index(u);
        return std::exp(-b2 * row[ui]);
      }
      const auto& reg = *sources.regularized;
      if (reg.base().translation_invariant())
        return std::exp(-b2 * reg.radial(dist(x, u, grid_.dim)));
      return std::exp(-b2 * reg.value(x, u));
    }
    case WeightMode::FrozenG: {
      const double r = dist(x, u, grid_.dim);
      return std::pow(r, b2) *
             std::exp(-b2 * sources.kernel->smooth_part(x, x));
    }
  }
  throw InvalidArgument("unknown weight mode");
}

void HEstimator::build_stencil(int scale_index, const WeightSources& sources) {
  const double eta = cfg_.scales[scale_index];
  const int stride = cfg_.u_strides[scale_index];
  const int d = grid_.dim;
  const int n = grid_.cells;
  const double h = grid_.spacing;
  const double vol_x = grid_.cell_volume();
  double vol_u = 1.0;
  for (int k = 0; k < d; ++k) vol_u *= stride * h;

  // Covariance rows at grid resolution, when the accelerator matches the
  // covariance the weight mode asks for.
  const GffGridTools* rows = nullptr;
  if (sources.rows && sources.rows->grid().cells == n &&
      sources.rows->grid().dim == d) {
    if (cfg_.weight == WeightMode::ExactC &&
        sources.kernel->kind() == KernelKind::GffSquare &&
        sources.rows->truncation() == sources.kernel->truncation()) {
      rows = sources.rows;
    } else if (cfg_.weight == WeightMode::RegularizedC &&
               sources.regularized->spec().mode ==
                   RegularizationSpec::Mode::SpectralTruncation &&
               sources.rows->truncation() ==
                   sources.regularized->spec().truncation) {
      rows = sources.rows;
    }
  }
  DstWorkspace ws;
  std::vector<double> row;
  if (rows) {
    ws = rows->make_workspace();
    row.resize(grid_.total_points());
  }

  auto st = std::make_unique<Stencil>();
  const int reach = static_cast<int>(std::floor(eta / h)) + 1;

  // Candidate x points: grid points inside the support ball.
  std::vector<std::int64_t> xs;
  if (points_) {
    for (std::int64_t i = 0; i < points_->size(); ++i)
      if (tf_.value(points_->position(i)) > 0.0) xs.push_back(i);
  } else {
    const Vec c = tf_.center();
    std::array<int, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
    for (int k = 0; k < d; ++k) {
      lo[k] = std::max(
          0, static_cast<int>(std::floor((c[k] - tf_.radius()) / h)) - 1);
      hi[k] = std::min(
          n - 1, static_cast<int>(std::ceil((c[k] + tf_.radius()) / h)) + 1);
    }
    std::array<int, 3> cc = lo;
    while (true) {
      const std::int64_t idx = grid_.index(cc);
      if (tf_.value(grid_.point(idx)) > 0.0) xs.push_back(idx);
      int k = d - 1;
      for (; k >= 0; --k) {
        if (++cc[k] <= hi[k]) break;
        cc[k] = lo[k];
      }
      if (k < 0) break;
    }
  }

  st->begin.push_back(0);
  for (std::int64_t xi : xs) {
    const std::int64_t x_grid = points_ ? points_->idx[xi] : xi;
    const Vec x = grid_.point(x_grid);
    const auto xc = grid_.coords(x_grid);
    const double fx = tf_.value(x);
    if (rows) rows->covariance_row(x_grid, ws, row);

    std::array<int, 3> qlo = {0, 0, 0}, qhi = {0, 0, 0};
    for (int k = 0; k < d; ++k) {
      // u coordinates live on the sublattice c = stride * q.
      qlo[k] = static_cast<int>(
          std::floor(static_cast<double>(xc[k] - reach) / stride));
      qhi[k] = static_cast<int>(
          std::ceil(static_cast<double>(xc[k] + reach) / stride));
    }
    std::array<int, 3> q = qlo;
    while (true) {
      std::array<int, 3> uc = {0, 0, 0};
      for (int k = 0; k < d; ++k) uc[k] = q[k] * stride;
      Vec z = {0.0, 0.0, 0.0};
      for (int k = 0; k < d; ++k) z[k] = (xc[k] - uc[k]) * h;
      const double r = norm(z, d);
      if (r > eta / 2.0 && r < eta) {
        if (!grid_.in_range(uc))
          throw SupportViolation("annulus point outside the domain");
        const std::int64_t u_grid = grid_.index(uc);
        std::int32_t u_local;
        if (points_) {
          u_local = points_->find(u_grid);
          if (u_local < 0)
            throw SupportViolation(
                "annulus point missing from the sampled point set");
        } else {
          u_local = static_cast<std::int32_t>(u_grid);
        }
        const double dphi =
            moll_.partial1_scaled(eta, rotate_to_front(z, cfg_.k));
        if (dphi != 0.0) {
          const Vec u = grid_.point(u_grid);
          st->u_local.push_back(u_local);
          st->coeff.push_back(weight_value(sources, x, u, row) * dphi * vol_u);
        }
      }
      int k = d - 1;
      for (; k >= 0; --k) {
        if (++q[k] <= qhi[k]) break;
        q[k] = qlo[k];
      }
      if (k < 0) break;
    }
    st->x_local.push_back(static_cast<std::int32_t>(xi));
    st->x_pref.push_back(fx * vol_x);
    st->begin.push_back(static_cast<std::int64_t>(st->u_local.size()));
  }
  stencils_[scale_index] = std::move(st);
}

void HEstimator::build_fast_plan(int scale_index,
                                 const WeightSources& sources) {
  if (points_)
    throw InvalidArgument("fast convolution path requires the full grid");
  if (cfg_.u_strides[scale_index] != 1)
    throw InvalidArgument("fast convolution path requires unit u-stride");
  bool ti = false;
  switch (cfg_.weight) {
    case WeightMode::ExactC:
      ti = sources.kernel->translation_invariant();
      break;
    case WeightMode::RegularizedC:
      ti = sources.regularized->base().translation_invariant() &&
           sources.regularized->spec().mode ==
               RegularizationSpec::Mode::MollifyConvolution;
      break;
    case WeightMode::FrozenG:
      ti = sources.kernel->translation_invariant();
      break;
  }
  if (!ti)
    throw InvalidArgument(
        "fast convolution path requires a translation-invariant weight");

  const double eta = cfg_.scales[scale_index];
  const int d = grid_.dim;
  const int n = grid_.cells;
  const double h = grid_.spacing;
  const double b2 = cfg_.beta * cfg_.beta;
  const int reach = static_cast<int>(std::floor(eta / h)) + 1;

  auto plan = std::make_unique<FastPlan>();
  plan->total = grid_.total_points();
  const std::int64_t N = plan->total;

  // Annulus kernel K(o) = W(|o|) dphi_eta(o) h^d at wrapped offsets. The
  // support clearance keeps the circular convolution exact.
  std::vector<std::complex<double>> kern(N, {0.0, 0.0});
  std::array<int, 3> o = {-reach, -reach, -reach};
  if (d == 2) o[2] = 0;
  const Vec origin = {0.0, 0.0, 0.0};
  while (true) {
    Vec z = {0.0, 0.0, 0.0};
    for (int k = 0; k < d; ++k) z[k] = o[k] * h;
    const double r = norm(z, d);
    if (r > eta / 2.0 && r < eta) {
      double w = 0.0;
      switch (cfg_.weight) {
        case WeightMode::ExactC:
          w = std::exp(-b2 * sources.kernel->radial_value(r));
          break;
        case WeightMode::RegularizedC:
          w = std::exp(-b2 * sources.regularized->radial(r));
          break;
        case WeightMode::FrozenG:
          w = std::pow(r, b2) *
              std::exp(-b2 * sources.kernel->smooth_part(origin, origin));
          break;
      }
      const double dphi = moll_.partial1_scaled(eta, rotate_to_front(z, cfg_.k));
      if (w * dphi != 0.0) {
        std::array<int, 3> wc = {0, 0, 0};
        for (int k = 0; k < d; ++k) wc[k] = ((o[k] % n) + n) % n;
        kern[grid_.index(wc)] = {w * dphi * grid_.cell_volume(), 0.0};
      }
    }
    int k = d - 1;
    for (; k >= 0; --k) {
      if (++o[k] <= reach) break;
      o[k] = -reach;
    }
    if (k < 0) break;
  }

  plan->pref.assign(N, 0.0);
  for (std::int64_t i = 0; i < N; ++i)
    plan->pref[i] = tf_.value(grid_.point(i)) * grid_.cell_volume();

  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    std::vector<std::complex<double>> a(N), b(N);
    auto* ap = reinterpret_cast<fftw_complex*>(a.data());
    auto* bp = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (d == 2) {
      plan->fwd = fftw_plan_dft_2d(n, n, ap, bp, FFTW_FORWARD, flags);
      plan->bwd = fftw_plan_dft_2d(n, n, ap, bp, FFTW_BACKWARD, flags);
    } else {
      plan->fwd = fftw_plan_dft_3d(n, n, n, ap, bp, FFTW_FORWARD, flags);
      plan->bwd = fftw_plan_dft_3d(n, n, n, ap, bp, FFTW_BACKWARD, flags);
    }
    if (!plan->fwd || !plan->bwd)
      throw FactorizationFailure("fft planning failed");
  }
  plan->khat.resize(N);
  fftw_execute_dft(plan->fwd, reinterpret_cast<fftw_complex*>(kern.data()),
                   reinterpret_cast<fftw_complex*>(plan->khat.data()));
  fast_plans_[scale_index] = std::move(plan);
}

std::complex<double> HEstimator::h_eta(const ChaosSample& chaos,
                                       int scale_index) const {
  return cfg_.path == EstimatorPath::FastConvolution
             ? h_eta_fast(chaos, scale_index)
             : h_eta_direct(chaos, scale_index);
}

std::complex<double> HEstimator::h_eta_direct(const ChaosSample& chaos,
                                              int scale_index) const {
  const Stencil& st = *stencils_.at(scale_index);
  const auto& mu = chaos.values;
  if (chaos.size() != (points_ ? points_->size() : grid_.total_points()))
    throw InvalidArgument("chaos sample does not match the estimator layout");
  std::complex<double> total = 0.0;
  for (std::size_t i = 0; i < st.x_local.size(); ++i) {
    std::complex<double> inner = 0.0;
    for (std::int64_t p = st.begin[i]; p < st.begin[i + 1]; ++p)
      inner += st.coeff[p] * std::conj(mu[st.u_local[p]]);
    total += st.x_pref[i] * mu[st.x_local[i]] * inner;
  }
  return total;
}

std::complex<double> HEstimator::h_eta_fast(const ChaosSample& chaos,
                                            int scale_index) const {
  const FastPlan* plan = fast_plans_.at(scale_index).get();
  if (!plan)
    throw InvalidArgument("fast convolution plan was not built for this path");
  if (chaos.size() != plan->total)
    throw InvalidArgument("chaos sample does not match the estimator layout");
  const std::int64_t N = plan->total;
  std::vector<std::complex<double>> buf(N), hat(N);
  for (std::int64_t i = 0; i < N; ++i) buf[i] = std::conj(chaos.values[i]);
  fftw_execute_dft(plan->fwd, reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(hat.data()));
  for (std::int64_t i = 0; i < N; ++i) hat[i] *= plan->khat[i];
  fftw_execute_dft(plan->bwd, reinterpret_cast<fftw_complex*>(hat.data()),
                   reinterpret_cast<fftw_complex*>(buf.data()));
  std::complex<double> total = 0.0;
  for (std::int64_t i = 0; i < N; ++i) {
    if (plan->pref[i] != 0.0)
      total += plan->pref[i] * chaos.values[i] * buf[i];
  }
  return total / static_cast<double>(N);
}

std::vector<std::int64_t> HEstimator::touched_indices(int scale_index) const {
  const Stencil& st = *stencils_.at(scale_index);
  std::set<std::int64_t> seen;
  auto to_grid = [&](std::int32_t local) {
    return points_ ? points_->idx[local] : static_cast<std::int64_t>(local);
  };
  for (auto x : st.x_local) seen.insert(to_grid(x));
  for (auto u : st.u_local) seen.insert(to_grid(u));
  return {seen.begin(), seen.end()};
}

std::complex<double> compute_A_N(std::span<const std::complex<double>> h,
                                 int N) {
  if (N < 1 || N > static_cast<int>(h.size()))
    throw InvalidArgument("scale-average depth out of range");
  std::complex<double> s = 0.0;
  for (int i = 0; i < N; ++i) s += h[i];
  return s / static_cast<double>(N);
}

namespace {

struct BatchLayout {
  int batches = 0;
  std::int64_t per_batch = 0;
};

BatchLayout batch_layout(std::int64_t R) {
  if (R < 20) return {0, 0};
  const int B = static_cast<int>(std::clamp<std::int64_t>(R / 50, 10, 50));
  return {B, R / B};
}

}  // namespace

ErrorStats reconstruction_error(std::span<const std::complex<double>> estimates,
                                std::span<const double> truths, double beta) {
  if (estimates.size() != truths.size() || estimates.empty())
    throw InvalidArgument("estimate and truth series must match and be nonempty");
  const std::int64_t R = static_cast<std::int64_t>(estimates.size());
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < R; ++i) {
    num += std::norm(estimates[i] + std::complex<double>(0.0, beta * truths[i]));
    den += beta * beta * truths[i] * truths[i];
  }
  if (den <= 0.0) throw InvalidArgument("degenerate truth series");
  ErrorStats out;
  out.rel_l2 = std::sqrt(num / den);

  const auto layout = batch_layout(R);
  out.batches = layout.batches;
  if (layout.batches == 0) {
    out.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double mean = 0.0, m2 = 0.0;
  std::vector<double> ratios(layout.batches);
  for (int b = 0; b < layout.batches; ++b) {
    double bn = 0.0, bd = 0.0;
    for (std::int64_t i = b * layout.per_batch; i < (b + 1) * layout.per_batch;
         ++i) {
      bn +=
          std::norm(estimates[i] + std::complex<double>(0.0, beta * truths[i]));
      bd += beta * beta * truths[i] * truths[i];
    }
    ratios[b] = bd > 0.0 ? std::sqrt(bn / bd) : 0.0;
    mean += ratios[b];
  }
  mean /= layout.batches;
  for (double r : ratios) m2 += (r - mean) * (r - mean);
  out.stderr_ = std::sqrt(m2 / (layout.batches - 1.0) / layout.batches);
  return out;
}

double residual_correlation(std::span<const std::complex<double>> a,
                            std::span<const std::complex<double>> b,
                            std::span<const double> truths, double beta) {
  if (a.size() != b.size() || a.size() != truths.size() || a.empty())
    throw InvalidArgument("residual series must match and be nonempty");
  const std::int64_t R = static_cast<std::int64_t>(a.size());
  std::complex<double> ma = 0.0, mb = 0.0;
  for (std::int64_t i = 0; i < R; ++i) {
    ma += a[i] + std::complex<double>(0.0, beta * truths[i]);
    mb += b[i] + std::complex<double>(0.0, beta * truths[i]);
  }
  ma /= static_cast<double>(R);
  mb /= static_cast<double>(R);
  std::complex<double> cov = 0.0;
  double va = 0.0, vb = 0.0;
  for (std::int64_t i = 0; i < R; ++i) {
    const auto ra = a[i] + std::complex<double>(0.0, beta * truths[i]) - ma;
    const auto rb = b[i] + std::complex<double>(0.0, beta * truths[i]) - mb;
    cov += ra * std::conj(rb);
    va += std::norm(ra);
    vb += std::norm(rb);
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return std::abs(cov) / std::sqrt(va * vb);
}

PairedDiff paired_rel_l2_diff(std::span<const std::complex<double>> a,
                              std::span<const std::complex<double>> b,
                              std::span<const double> truths, double beta) {
  if (a.size() != b.size() || a.size() != truths.size())
    throw InvalidArgument("paired series must match");
  const std::int64_t R = static_cast<std::int64_t>(a.size());
  const auto layout = batch_layout(R);
  if (layout.batches == 0)
    throw InvalidArgument("too few replicas for a paired batch comparison");
  std::vector<double> diffs(layout.batches);
  double mean = 0.0;
  for (int batch = 0; batch < layout.batches; ++batch) {
    double na = 0.0, nb = 0.0, d = 0.0;
    for (std::int64_t i = batch * layout.per_batch;
         i < (batch + 1) * layout.per_batch; ++i) {
      na += std::norm(a[i] + std::complex<double>(0.0, beta * truths[i]));
      nb += std::norm(b[i] + std::complex<double>(0.0, beta * truths[i]));
      d += beta * beta * truths[i] * truths[i];
    }
    diffs[batch] = d > 0.0 ? std::sqrt(na / d) - std::sqrt(nb / d) : 0.0;
    mean += diffs[batch];
  }
  mean /= layout.batches;
  double m2 = 0.0;
  for (double v : diffs) m2 += (v - mean) * (v - mean);
  PairedDiff out;
  out.mean = mean;
  out.stderr_ = std::sqrt(m2 / (layout.batches - 1.0) / layout.batches);
  return out;
}

}  // namespace imclab
