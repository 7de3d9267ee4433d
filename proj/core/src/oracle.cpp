#include "imclab/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>

#include "imclab/mollifier.hpp"
#include "json.hpp"

namespace imclab {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;

Vec vsub(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

// Swaps coordinate k (1-based) into slot 0; radial functions are unchanged.
Vec rot(const Vec& z, int k) {
  Vec w = z;
  std::swap(w[0], w[k - 1]);
  return w;
}

void check_refinement(double coarse, double fine, double rel_tol,
                      const char* what) {
  const double scale = std::max({std::abs(coarse), std::abs(fine), 1e-12});
  if (std::abs(fine - coarse) > rel_tol * scale)
    throw NonConverged(std::string(what) +
                       ": refinement moved the value by more than the "
                       "declared tolerance");
}

}  // namespace

double four_point_E(const CovarianceKernel& K, const Vec& x, const Vec& y,
                    const Vec& u, const Vec& v, double beta) {
  const double b2 = beta * beta;
  const double e = K.value(x, y) + K.value(vsub(x, u), vsub(y, v)) -
                   K.value(x, vsub(y, v)) - K.value(y, vsub(x, u));
  return std::exp(b2 * e);
}

double girsanov_two_point(const RegularizedKernel& K, const Vec& x,
                          const Vec& u, double beta) {
  return std::exp(beta * beta * K.value(x, u));
}

std::complex<double> girsanov_three_point(const RegularizedKernel& K,
                                          const Vec& x, const Vec& u,
                                          const Vec& y, double beta) {
  const double amp = std::exp(beta * beta * K.value(x, u));
  return std::complex<double>(0.0, beta) * amp * (K.value(x, y) - K.value(u, y));
}

namespace {

// Var<dGamma, f> for the spectral square kernel: sum_jl w_jl b_jl^2 with
// b_jl the mode coefficients of d_k f, factorized through sine tables.
double dv_spectral(const CovarianceKernel& K, const TestFunction& tf, int k,
                   int level) {
  const int J = K.truncation();
  const int m = level;
  const double hq = 1.0 / m;
  Eigen::MatrixXd F(m, m);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l) {
      const Vec p = {(i + 0.5) * hq, (l + 0.5) * hq, 0.0};
      F(i, l) = tf.partial(p, k);
    }
  Eigen::MatrixXd S1(m, J), S2(m, J);
  for (int i = 0; i < m; ++i)
    for (int j = 1; j <= J; ++j) {
      S1(i, j - 1) = std::sin(kPi * j * (i + 0.5) * hq);
      S2(i, j - 1) = std::sin(kPi * j * (i + 0.5) * hq);
    }
  const Eigen::MatrixXd B = S1.transpose() * F * S2;  // J x J
  double total = 0.0;
  for (int j = 1; j <= J; ++j)
    for (int l = 1; l <= J; ++l) {
      const double b = 2.0 * B(j - 1, l - 1) * hq * hq;
      total += K.gff_weight(j, l) * b * b;
    }
  return total;
}

// Generic route: double lattice over the support box, the second lattice
// shifted by half a cell so the log singularity is never hit.
double dv_lattice(const CovarianceKernel& K, const TestFunction& tf, int k,
                  int level) {
  const int d = tf.dim();
  const int m = level;
  const double r = tf.radius();
  const Vec c = tf.center();
  const double hq = 2.0 * r / m;
  const double cell = std::pow(hq, d);

  struct Node {
    Vec p;
    double df;
  };
  auto collect = [&](double shift) {
    std::vector<Node> nodes;
    std::array<int, 3> idx = {0, 0, 0};
    while (true) {
      Vec p = {0.0, 0.0, 0.0};
      for (int a = 0; a < d; ++a)
        p[a] = c[a] - r + (idx[a] + 0.5) * hq + shift;
      const double df = tf.partial(p, k);
      if (df != 0.0) nodes.push_back({p, df});
      int a = d - 1;
      for (; a >= 0; --a) {
        if (++idx[a] < m) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
    return nodes;
  };
  const auto xs = collect(0.0);
  const auto ys = collect(hq / 2.0);
  double total = 0.0;
  for (const auto& x : xs) {
    double inner = 0.0;
    for (const auto& y : ys) inner += y.df * K.value(x.p, y.p);
    total += x.df * inner;
  }
  return total * cell * cell;
}

}  // namespace

double derivative_variance(const CovarianceKernel& K, const TestFunction& tf,
                           int k, const QuadratureSpec& q) {
  if (k < 1 || k > tf.dim()) throw InvalidArgument("bad derivative coordinate");
  const bool spectral = K.kind() == KernelKind::GffSquare;
  auto eval = [&](int level) {
    return spectral ? dv_spectral(K, tf, k, level) : dv_lattice(K, tf, k, level);
  };
  const int fine = spectral ? 2 * q.level : (3 * q.level) / 2;
  const double v1 = eval(q.level);
  const double v2 = eval(fine);
  check_refinement(v1, v2, q.rel_tol, "derivative_variance");
  return v2;
}

namespace {

struct SmoothedF {
  std::vector<Vec> nodes;
  std::vector<double> g;   // (f * phi_eta)(u)
  std::vector<double> dg;  // d_k of it, from the mollifier's own derivative
  double cell = 0.0;
};

// f convolved with the annulus mollifier on a lattice covering
// supp f + eta; spacing matches the supp-f lattice of the outer quadrature.
SmoothedF smooth_f(const TestFunction& tf, double eta, int k, int level) {
  const int d = tf.dim();
  const double r = tf.radius();
  const Vec c = tf.center();
  const double hq = 2.0 * r / level;
  const double half = r + eta + hq;
  const int m = static_cast<int>(std::ceil(2.0 * half / hq));
  Mollifier moll(d);

  // Support samples of f.
  std::vector<Vec> fx;
  std::vector<double> fv;
  {
    std::array<int, 3> idx = {0, 0, 0};
    while (true) {
      Vec p = {0.0, 0.0, 0.0};
      for (int a = 0; a < d; ++a) p[a] = c[a] - r + (idx[a] + 0.5) * hq;
      const double v = tf.value(p);
      if (v > 0.0) {
        fx.push_back(p);
        fv.push_back(v);
      }
      int a = d - 1;
      for (; a >= 0; --a) {
        if (++idx[a] < level) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
  }

  SmoothedF out;
  out.cell = std::pow(hq, d);
  std::array<int, 3> idx = {0, 0, 0};
  while (true) {
    Vec u = {0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) u[a] = c[a] - half + (idx[a] + 0.5) * hq;
    const double du = dist(u, c, d);
    if (du <= r + eta + hq) {
      double g = 0.0, dg = 0.0;
      for (std::size_t i = 0; i < fx.size(); ++i) {
        const Vec z = vsub(fx[i], u);
        const double zr = norm(z, d);
        if (zr > eta / 2.0 && zr < eta) {
          g += fv[i] * moll.value_scaled(eta, z);
          // d/du_k phi_eta(x - u) = -(d_k phi_eta)(x - u)
          dg -= fv[i] * moll.partial1_scaled(eta, rot(z, k));
        }
      }
      if (g != 0.0 || dg != 0.0) {
        out.nodes.push_back(u);
        out.g.push_back(g * out.cell);
        out.dg.push_back(dg * out.cell);
      }
    }
    int a = d - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < m) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  return out;
}

// Spectral square kernel: beta^2 sum_jl w_jl a_jl b_jl, with a the mode
// coefficients of the smoothed f against d_k e_jl and b those of d_k f.
double cross_spectral(const CovarianceKernel& K, const TestFunction& tf,
                      double eta, int k, double beta, int level) {
  const int J = K.truncation();
  const SmoothedF sf = smooth_f(tf, eta, k, level);

  std::vector<double> a(static_cast<std::size_t>(J) * J, 0.0);
  for (std::size_t i = 0; i < sf.nodes.size(); ++i) {
    const Vec& u = sf.nodes[i];
    // d_k e_jl carries the cosine in coordinate k.
    std::vector<double> s1(J), s2(J);
    for (int j = 1; j <= J; ++j) {
      const double t1 = kPi * j * u[0];
      const double t2 = kPi * j * u[1];
      if (k == 1) {
        s1[j - 1] = 2.0 * kPi * j * std::cos(t1);
        s2[j - 1] = std::sin(t2);
      } else {
        s1[j - 1] = 2.0 * std::sin(t1);
        s2[j - 1] = kPi * j * std::cos(t2);
      }
    }
    const double g = sf.g[i];
    for (int j = 0; j < J; ++j) {
      const double gj = g * s1[j];
      for (int l = 0; l < J; ++l) a[j * J + l] += gj * s2[l];
    }
  }

  const double r = tf.radius();
  const Vec c = tf.center();
  const double hq = 2.0 * r / level;
  std::vector<double> b(static_cast<std::size_t>(J) * J, 0.0);
  {
    std::array<int, 2> idx = {0, 0};
    while (true) {
      const Vec p = {c[0] - r + (idx[0] + 0.5) * hq,
                     c[1] - r + (idx[1] + 0.5) * hq, 0.0};
      const double df = tf.partial(p, k);
      if (df != 0.0) {
        std::vector<double> s1(J), s2(J);
        for (int j = 1; j <= J; ++j) {
          s1[j - 1] = 2.0 * std::sin(kPi * j * p[0]);
          s2[j - 1] = std::sin(kPi * j * p[1]);
        }
        const double w = df * hq * hq;
        for (int j = 0; j < J; ++j) {
          const double wj = w * s1[j];
          for (int l = 0; l < J; ++l) b[j * J + l] += wj * s2[l];
        }
      }
      int a2 = 1;
      for (; a2 >= 0; --a2) {
        if (++idx[a2] < level) break;
        idx[a2] = 0;
      }
      if (a2 < 0) break;
    }
  }

  double total = 0.0;
  for (int j = 1; j <= J; ++j)
    for (int l = 1; l <= J; ++l)
      total += K.gff_weight(j, l) * a[(j - 1) * J + (l - 1)] *
               b[(j - 1) * J + (l - 1)];
  // sf.g carries the x-integration cell only; the u integral contributes one
  // more cell volume.
  return beta * beta * total * sf.cell;
}

// Generic route, integrated by parts so only the log singularity remains:
// -beta^2 int d_k(f * phi_eta)(u) d_k f(y) C(u, y).
double cross_lattice(const CovarianceKernel& K, const TestFunction& tf,
                     double eta, int k, double beta, int level) {
  const int d = tf.dim();
  const SmoothedF sf = smooth_f(tf, eta, k, level);
  const double r = tf.radius();
  const Vec c = tf.center();
  const double hq = 2.0 * r / level;
  double total = 0.0;
  std::array<int, 3> idx = {0, 0, 0};
  while (true) {
    Vec y = {0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a)
      y[a] = c[a] - r + (idx[a] + 0.5) * hq + hq / 2.0;
    const double df = tf.partial(y, k);
    if (df != 0.0) {
      double inner = 0.0;
      for (std::size_t i = 0; i < sf.nodes.size(); ++i)
        if (sf.dg[i] != 0.0) inner += sf.dg[i] * K.value(sf.nodes[i], y);
      total += df * inner;
    }
    int a = d - 1;
    for (; a >= 0; --a) {
      if (++idx[a] < level) break;
      idx[a] = 0;
    }
    if (a < 0) break;
  }
  // One cell volume for the y integral and one for the u integral folded
  // into sf.dg's convolution values.
  return -beta * beta * total * std::pow(hq, d) * sf.cell;
}

}  // namespace

double cross_term_quadrature(const CovarianceKernel& K, const TestFunction& tf,
                             double eta, int k, double beta,
                             const QuadratureSpec& q) {
  if (beta == 0.0) return 0.0;
  const bool spectral = K.kind() == KernelKind::GffSquare;
  auto eval = [&](int level) {
    return spectral ? cross_spectral(K, tf, eta, k, beta, level)
                    : cross_lattice(K, tf, eta, k, beta, level);
  };
  const double v1 = eval(q.level);
  const double v2 = eval((3 * q.level) / 2);
  check_refinement(v1, v2, q.rel_tol, "cross_term_quadrature");
  return v2;
}

namespace {

// Annulus pair list on the simulation grid: entries (x, u, c) with
// c = f(x) dphi_eta(x - u) h^{2d}, indices into a rectangular window that
// covers supp f plus the largest halo.
struct Window {
  std::array<int, 3> lo = {0, 0, 0};
  std::array<int, 3> span = {1, 1, 1};
  int dim = 2;

  std::int64_t count() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= span[a];
    return n;
  }
  std::int64_t local(const std::array<int, 3>& c) const {
    std::int64_t i = 0;
    for (int a = 0; a < dim; ++a) i = i * span[a] + (c[a] - lo[a]);
    return i;
  }
  Vec point(std::int64_t i, double h) const {
    std::array<int, 3> c = {0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      c[a] = lo[a] + static_cast<int>(i % span[a]);
      i /= span[a];
    }
    Vec p = {0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = (c[a] + 0.5) * h;
    return p;
  }
};

Window make_window(const Grid& grid, const TestFunction& tf, double halo) {
  Window w;
  w.dim = grid.dim;
  const double h = grid.spacing;
  for (int a = 0; a < grid.dim; ++a) {
    const int lo = static_cast<int>(
        std::floor((tf.center()[a] - tf.radius() - halo) / h)) - 1;
    const int hi = static_cast<int>(
        std::ceil((tf.center()[a] + tf.radius() + halo) / h)) + 1;
    if (lo < 0 || hi >= grid.cells)
      throw SupportViolation("halo window exits the domain");
    w.lo[a] = lo;
    w.span[a] = hi - lo + 1;
  }
  return w;
}

struct PairList {
  std::vector<std::int32_t> x, u;
  std::vector<double> c;
};

PairList annulus_pairs(const Grid& grid, const TestFunction& tf,
                       const Window& w, double eta, int k) {
  const int d = grid.dim;
  const double h = grid.spacing;
  const double vol2 = grid.cell_volume() * grid.cell_volume();
  Mollifier moll(d);
  const int reach = static_cast<int>(std::floor(eta / h)) + 1;

  PairList out;
  std::array<int, 3> xc = w.lo;
  while (true) {
    Vec x = {0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) x[a] = (xc[a] + 0.5) * h;
    const double fx = tf.value(x);
    if (fx > 0.0) {
      const std::int64_t xl = w.local(xc);
      std::array<int, 3> o = {-reach, -reach, -reach};
      if (d == 2) o[2] = 0;
      while (true) {
        Vec z = {0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) z[a] = o[a] * h;
        const double zr = norm(z, d);
        if (zr > eta / 2.0 && zr < eta) {
          const double dphi = moll.partial1_scaled(eta, rot(z, k));
          if (dphi != 0.0) {
            std::array<int, 3> uc = xc;
            for (int a = 0; a < d; ++a) uc[a] -= o[a];
            out.x.push_back(static_cast<std::int32_t>(xl));
            out.u.push_back(static_cast<std::int32_t>(w.local(uc)));
            out.c.push_back(fx * dphi * vol2);
          }
        }
        int a = d - 1;
        for (; a >= 0; --a) {
          if (++o[a] <= reach) break;
          o[a] = -reach;
        }
        if (a < 0) break;
      }
    }
    int a = d - 1;
    for (; a >= 0; --a) {
      if (++xc[a] < w.lo[a] + w.span[a]) break;
      xc[a] = w.lo[a];
    }
    if (a < 0) break;
  }
  return out;
}

// Dense window-by-window table of the regularized covariance.
std::vector<double> window_cov_table(const RegularizedKernel& K,
                                     const Grid& grid, const Window& w) {
  const std::int64_t n = w.count();
  std::vector<double> table(static_cast<std::size_t>(n) * n);
  const double h = grid.spacing;
  std::vector<Vec> pts(n);
  for (std::int64_t i = 0; i < n; ++i) pts[i] = w.point(i, h);

  const bool ti = K.base().translation_invariant() &&
                  K.spec().mode == RegularizationSpec::Mode::MollifyConvolution;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i; j < n; ++j) {
      const double v = ti ? K.radial(dist(pts[i], pts[j], grid.dim))
                          : K.value(pts[i], pts[j]);
      table[i * n + j] = v;
      table[j * n + i] = v;
    }
  }
  return table;
}

// Spectral-mode tables go through full covariance rows instead of per-pair
// series sums.
std::vector<double> window_cov_table_spectral(const RegularizedKernel& K,
                                              const Grid& grid,
                                              const Window& w) {
  const std::int64_t n = w.count();
  std::vector<double> table(static_cast<std::size_t>(n) * n);
  GffGridTools tools(grid, K.base(), K.spec().truncation);
  auto ws = tools.make_workspace();
  std::vector<double> row(grid.total_points());
  const double h = grid.spacing;
  for (std::int64_t i = 0; i < n; ++i) {
    const Vec p = w.point(i, h);
    tools.covariance_row(grid.nearest_index(p), ws, row);
    for (std::int64_t j = 0; j < n; ++j)
      table[i * n + j] = row[grid.nearest_index(w.point(j, h))];
  }
  return table;
}

std::vector<double> cov_table(const RegularizedKernel& K, const Grid& grid,
                              const Window& w) {
  return K.spec().mode == RegularizationSpec::Mode::SpectralTruncation
             ? window_cov_table_spectral(K, grid, w)
             : window_cov_table(K, grid, w);
}

double pair_pair_sum(const PairList& p1, const PairList& p2,
                     const std::vector<double>& C, std::int64_t n, double beta,
                     bool symmetric) {
  const double b2 = beta * beta;
  double total = 0.0;
  const std::size_t n1 = p1.c.size();
  const std::size_t n2 = p2.c.size();
  for (std::size_t i = 0; i < n1; ++i) {
    const std::int64_t xi = p1.x[i], ui = p1.u[i];
    const double ci = p1.c[i];
    const double* Cx = C.data() + xi * n;
    const double* Cu = C.data() + ui * n;
    double inner = 0.0;
    const std::size_t jstart = symmetric ? i : 0;
    for (std::size_t j = jstart; j < n2; ++j) {
      const std::int64_t yj = p2.x[j], vj = p2.u[j];
      const double e = Cx[yj] + Cu[vj] - Cx[vj] - Cu[yj];
      double term = p2.c[j] * std::exp(b2 * e);
      if (symmetric && j > i) term *= 2.0;
      inner += term;
    }
    total += ci * inner;
  }
  return total;
}

}  // namespace

double second_moment_H_quadrature(const RegularizedKernel& K, const Grid& grid,
                                  const TestFunction& tf, double eta, int k,
                                  double beta) {
  if (grid.dim != 2)
    throw InfeasibleDimension(
        "four-fold annulus sum implemented for d = 2 only");
  const Window w = make_window(grid, tf, eta);
  const PairList p = annulus_pairs(grid, tf, w, eta, k);
  const auto C = cov_table(K, grid, w);
  return pair_pair_sum(p, p, C, w.count(), beta, true);
}

double offdiag_covariance_quadrature(const RegularizedKernel& K,
                                     const Grid& grid, const TestFunction& tf,
                                     double eta1, double eta2, int k,
                                     double beta) {
  if (grid.dim != 2)
    throw InfeasibleDimension(
        "four-fold annulus sum implemented for d = 2 only");
  const Window w = make_window(grid, tf, std::max(eta1, eta2));
  const PairList p1 = annulus_pairs(grid, tf, w, eta1, k);
  const PairList p2 = annulus_pairs(grid, tf, w, eta2, k);
  const auto C = cov_table(K, grid, w);
  return pair_pair_sum(p1, p2, C, w.count(), beta, false);
}

std::complex<double> estimator_truth_cross_moment(const RegularizedKernel& K,
                                                  const Grid& grid,
                                                  const TestFunction& tf,
                                                  double eta, int k,
                                                  double beta) {
  const Window w = make_window(grid, tf, eta);
  const PairList p = annulus_pairs(grid, tf, w, eta, k);
  const std::int64_t n = w.count();
  const auto C = cov_table(K, grid, w);

  // Net coefficient per window point: +c at x, -c at u; then
  // E[H T] = -i beta h^d sum_y d_k f(y) sum_w S(w) C(w, y).
  std::vector<double> S(n, 0.0);
  for (std::size_t i = 0; i < p.c.size(); ++i) {
    S[p.x[i]] += p.c[i];
    S[p.u[i]] -= p.c[i];
  }
  const double h = grid.spacing;
  double acc = 0.0;
  for (std::int64_t y = 0; y < n; ++y) {
    const double df = tf.partial(w.point(y, h), k);
    if (df == 0.0) continue;
    double inner = 0.0;
    const double* Cy = C.data() + y * n;
    for (std::int64_t i = 0; i < n; ++i)
      if (S[i] != 0.0) inner += S[i] * Cy[i];
    acc += df * inner;
  }
  acc *= grid.cell_volume();
  return std::complex<double>(0.0, -beta) * acc;
}

OracleCache::OracleCache(std::string path) : path_(std::move(path)) {}

std::optional<double> OracleCache::get(const std::string& key) const {
  std::ifstream in(path_);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
  return j[key].get<double>();
}

void OracleCache::put(const std::string& key, double value) {
  nlohmann::json j = nlohmann::json::object();
  {
    std::ifstream in(path_);
    if (in) {
      try {
        in >> j;
      } catch (const nlohmann::json::exception&) {
        j = nlohmann::json::object();
      }
    }
  }
  j[key] = value;
  std::ofstream out(path_);
  if (!out) throw Error("cannot write oracle cache: " + path_);
  out << j.dump(2) << "\n";
}

}  // namespace imclab
