#pragma once

#include <complex>

#include "imclab/sampler.hpp"

namespace imclab {

struct ChaosParams {
  double beta = 1.0;
  /// Allows beta outside (0, sqrt(d)) for out-of-range experiments.
  bool allow_out_of_range = false;
};

/// Renormalized imaginary chaos on the field's point set:
/// mu(x) = exp(i beta Gamma(x) + (beta^2/2) Var Gamma(x)).
struct ChaosSample {
  Grid grid;
  std::shared_ptr<const PointSet> points;  // null: full grid
  std::vector<std::complex<double>> values;
  double beta = 0.0;
  RegularizationSpec reg;
  SeedStream seed;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

ChaosSample build_chaos(const FieldSample& field, const ChaosParams& params);

struct ReflectionWitness {
  double max_re_mismatch = 0.0;   // max |Re mu(G) - Re mu(-G)|
  double pairing_antisym = 0.0;   // |grad_pairing(G) + grad_pairing(-G)|
  double pairing_magnitude = 0.0; // |grad_pairing(G)|
};

/// Shows that the real part of the chaos is blind to the sign of the field
/// while the gradient pairing is not.
ReflectionWitness reflection_witness(const FieldSample& field,
                                     const ChaosParams& params,
                                     const TestFunction& tf, int k);

}  // namespace imclab
