#include "imclab/cascade.hpp"

#include <cmath>

#include "imclab/errors.hpp"

namespace imclab {

CascadeRealization::CascadeRealization(int levels, double sigma, double beta,
                                       SeedStream seed)
    : levels_(levels), sigma_(sigma), beta_(beta) {
  if (levels < 0 || levels > 24)
    throw InvalidArgument("cascade depth must lie in [0, 24]");
  if (beta == 0.0) throw InvalidArgument("beta must be nonzero");
  Rng rng(seed);
  weights_.resize(levels_ + 1);
  for (int l = 0; l <= levels_; ++l) {
    weights_[l].resize(std::size_t{1} << l);
    for (auto& w : weights_[l]) w = sigma_ * rng.gaussian();
  }
}

double CascadeRealization::weight(int level, std::int64_t pos) const {
  if (level < 0 || level > levels_ || pos < 0 ||
      pos >= (std::int64_t{1} << level))
    throw InvalidArgument("invalid dyadic interval index");
  return weights_[level][pos];
}

std::vector<double> CascadeRealization::additive_field() const {
  const std::int64_t n = cell_count();
  std::vector<double> out(n);
  for (std::int64_t c = 0; c < n; ++c) {
    double a = 0.0;
    for (int l = 0; l <= levels_; ++l) a += weights_[l][c >> (levels_ - l)];
    out[c] = a;
  }
  return out;
}

std::vector<std::complex<double>> CascadeRealization::cascade_values() const {
  const std::int64_t n = cell_count();
  std::vector<std::complex<double>> out(n);
  for (std::int64_t c = 0; c < n; ++c) {
    std::complex<double> m = 1.0;
    for (int l = 0; l <= levels_; ++l) {
      const double x = beta_ * weights_[l][c >> (levels_ - l)];
      m *= std::complex<double>(std::cos(x), std::sin(x));
    }
    out[c] = m;
  }
  return out;
}

CascadeRealization CascadeRealization::shifted(int level, std::int64_t pos,
                                               double amount) const {
  if (level < 0 || level > levels_ || pos < 0 ||
      pos >= (std::int64_t{1} << level))
    throw InvalidArgument("invalid dyadic interval index");
  CascadeRealization out = *this;
  out.weights_[level][pos] += amount;
  return out;
}

CascadeRealization build_cascade(int levels, double sigma, double beta,
                                 SeedStream seed) {
  return CascadeRealization(levels, sigma, beta, seed);
}

}  // namespace imclab
