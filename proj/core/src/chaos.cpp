#include "imclab/chaos.hpp"

#include <cmath>

namespace imclab {

ChaosSample build_chaos(const FieldSample& field, const ChaosParams& params) {
  if (field.variance.size() != field.values.size())
    throw InvalidArgument("field sample lacks its variance profile");
  const double beta = params.beta;
  if (!params.allow_out_of_range) {
    const double limit = std::sqrt(static_cast<double>(field.grid.dim));
    if (beta <= 0.0 || beta >= limit)
      throw InvalidArgument("beta outside (0, sqrt(d)); set the override flag");
  }
  ChaosSample out;
  out.grid = field.grid;
  out.points = field.points;
  out.beta = beta;
  out.reg = field.reg;
  out.seed = field.seed;
  out.values.resize(field.values.size());
  const double half_b2 = 0.5 * beta * beta;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double amp = std::exp(half_b2 * field.variance[i]);
    const double phase = beta * field.values[i];
    out.values[i] = {amp * std::cos(phase), amp * std::sin(phase)};
  }
  return out;
}

ReflectionWitness reflection_witness(const FieldSample& field,
                                     const ChaosParams& params,
                                     const TestFunction& tf, int k) {
  FieldSample neg = field;
  for (auto& v : neg.values) v = -v;
  ChaosParams p = params;
  p.allow_out_of_range = true;
  const ChaosSample mu = build_chaos(field, p);
  const ChaosSample mu_neg = build_chaos(neg, p);

  ReflectionWitness w;
  for (std::size_t i = 0; i < mu.values.size(); ++i)
    w.max_re_mismatch = std::max(
        w.max_re_mismatch,
        std::abs(mu.values[i].real() - mu_neg.values[i].real()));
  const double t = grad_pairing(field, tf, k);
  const double t_neg = grad_pairing(neg, tf, k);
  w.pairing_antisym = std::abs(t + t_neg);
  w.pairing_magnitude = std::abs(t);
  return w;
}

}  // namespace imclab
