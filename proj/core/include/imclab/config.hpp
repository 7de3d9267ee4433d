#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imclab/grid.hpp"

namespace imclab {

/// Flat key=value experiment description. Unknown keys are hard errors so a
/// typo cannot silently run a long experiment with defaults.
struct ExperimentConfig {
  // kernel.*
  std::string kernel_kind = "gff";  // gff | purelog | logconst
  int kernel_J = 64;                // gff truncation
  double kernel_g0 = 0.0;           // logconst offset

  // grid.*
  int dim = 2;
  int n = 128;
  double L = 1.0;

  // reg.*
  std::string reg_mode = "spectral";  // spectral | mollify
  int reg_J = 64;
  double reg_delta = 0.0625;

  // chaos.*
  double beta = 1.0;

  // tf.*
  Vec tf_center = {0.5, 0.5, 0.5};
  double tf_radius = 0.15;
  double tf_amplitude = 1.0;

  // est.*
  int k = 1;
  std::string scale_rule = "explicit";  // explicit | geometric | doubleexp
  std::vector<double> scales = {0.2, 0.1, 0.05};
  double rule_eta0 = 0.2;
  double rule_rho = 0.5;
  double rule_K = 2.0;
  int rule_count = 3;
  std::string weight = "regularized";  // exact | regularized | frozeng
  std::string path = "direct";         // direct | fast
  std::vector<int> u_strides;          // empty: all 1

  // sampler.*
  std::string sampler_kind = "auto";  // auto | gff | cholesky

  // mc.*
  std::int64_t replicas = 2000;
  std::uint64_t seed = 1;
  int workers = 1;

  // out.*
  std::string out_dir = ".";

  // debug.*
  double corrupt_g_offset = 0.0;  // shifts the oracle kernel, fault injection
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Re-validates the cross-module invariant chain (grid vs scales vs
/// regularization vs support clearance) and returns human-readable warnings
/// for settings that are legal but below the recommended resolution margins.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// Canonical one-line-per-key rendering; equal configs render identically.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a hash of the canonical text, hex string.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace imclab
