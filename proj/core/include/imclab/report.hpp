#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace imclab {

struct ScaleRow {
  double eta = 0.0;      // smallest included scale for averaged rows
  int N = 0;             // 0: single scale; >0: depth of the running average
  std::complex<double> mean_H;
  double rel_l2 = 0.0;
  double stderr_ = 0.0;  // NaN rendered as "n/a" in the CSV
};

struct OracleRow {
  std::string quantity;
  double mc = 0.0;
  double mc_stderr = 0.0;
  double oracle = 0.0;
  double z = 0.0;  // (mc - oracle) / mc_stderr
  bool pass = false;
};

struct ExactRow {
  std::string name;
  double value = 0.0;  // measured deviation
  double tol = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  std::string kind;  // "convergence" | "verification"
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t replicas = 0;
  std::string code_version;

  std::vector<ScaleRow> per_scale;
  std::vector<ScaleRow> averaged;
  std::vector<double> scales;
  std::vector<std::vector<double>> residual_corr;
  std::vector<OracleRow> oracle_rows;
  std::vector<ExactRow> exact_rows;
  std::vector<std::string> warnings;
  bool pass = true;

  double runtime_seconds = 0.0;  // console diagnostics only, never in body()

  /// Deterministic JSON body: a pure function of the numerical content, so
  /// reruns at any worker count are byte-comparable.
  std::string body() const;

  /// Convergence CSV: eta,N,mean_H_re,mean_H_im,rel_L2,stderr,replicas,seed.
  std::string csv() const;
};

/// Writes <stem>.json and <stem>.csv under dir; returns the JSON path.
std::string write_report(const ExperimentReport& report,
                         const std::string& dir, const std::string& stem);

}  // namespace imclab
