#pragma once

#include <memory>

#include "imclab/chaos.hpp"
#include "imclab/config.hpp"
#include "imclab/estimator.hpp"
#include "imclab/oracle.hpp"
#include "imclab/report.hpp"
#include "imclab/sampler.hpp"

namespace imclab {

/// Runtime objects assembled from a config; shared read-only across worker
/// threads.
struct ExperimentSetup {
  ExperimentConfig cfg;
  Grid grid;
  CovarianceKernel kernel = CovarianceKernel::pure_log(2);
  std::shared_ptr<RegularizedKernel> reg;
  TestFunction tf{2, {0.5, 0.5, 0.0}, 0.15};
  std::vector<double> scales;
  std::shared_ptr<const PointSet> points;  // null: full grid
  std::shared_ptr<GffSampler> gff;
  std::shared_ptr<CholeskySampler> cholesky;
  std::shared_ptr<GffGridTools> rows;
  std::shared_ptr<HEstimator> estimator;
  std::vector<std::string> warnings;

  FieldSample sample(std::int64_t replica) const;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

struct ReplicaRecord {
  std::vector<std::complex<double>> h;  // per scale
  double truth = 0.0;                   // grid gradient pairing
};

/// Runs all replicas through the worker pool; results are indexed by replica
/// so every reduction is independent of the worker count.
std::vector<ReplicaRecord> run_replicas(const ExperimentSetup& setup);

ExperimentReport run_convergence_experiment(const ExperimentConfig& cfg);
ExperimentReport run_verification_suite(const ExperimentConfig& cfg);

/// The exact-identity checks (mollifier mass, four-point cancellation,
/// cascade shift, chaos reflection, two-path equivalence, annulus locality).
std::vector<ExactRow> run_exact_suite(std::uint64_t seed);

/// Max |cascade difference| after shifting one dyadic weight by 2 pi / beta.
double cascade_shift_deviation(double beta, int levels, std::uint64_t seed);

struct ReconstructionDemo {
  std::complex<double> mean_estimate;  // (i / beta)(A_N^(1) + A_N^(2)), averaged
  double mean_truth = 0.0;             // divergence pairing of the vector field
  double rel_l2 = 0.0;
};

/// Assembles the divergence pairing of a vector test function (f, f) from
/// per-coordinate estimates; the one-line global reconstruction demo.
ReconstructionDemo run_field_reconstruction_demo(const ExperimentConfig& cfg);

}  // namespace imclab
