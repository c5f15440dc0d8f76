#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmcmc/mode_jump.hpp"
#include "mmcmc/tempering.hpp"

namespace mmcmc::harness {

enum class TargetFamily { mixture, autologistic, tabular, sur };
enum class SamplerKind { rwm, apt, pawl, jams, ram };

std::string_view to_string(TargetFamily f);
std::string_view to_string(SamplerKind k);

struct TargetSpec {
  TargetFamily family = TargetFamily::mixture;
  // mixture
  int dimension = 2;
  // autologistic
  int height = 16;
  int width = 16;
  double alpha = 1.0;
  double beta = 0.7;
  /// Observed image file (0/1 grid); empty selects synth_ice(height, width, image_seed).
  std::string image;
  std::uint64_t image_seed = 1;
  // tabular
  std::vector<double> probabilities;
  /// "line" (index +-1) or "complete".
  std::string adjacency = "line";
  // sur
  std::string dataset = "bimodal_example";

  bool operator==(const TargetSpec&) const = default;
};

struct SamplerSpec {
  SamplerKind kind = SamplerKind::rwm;
  // rwm
  bool adapt = true;
  double target_acceptance = 0.234;
  int flips_per_step = 1;
  // apt
  int levels = 5;
  double beta_min = 0.005;
  SwapSchedule schedule = SwapSchedule::deo;
  bool adapt_ladder = true;
  std::size_t adapt_sweeps = 0;
  int local_steps = 1;
  // pawl
  int chains = 4;
  int initial_bins = 10;
  double flat_c = 0.9;
  std::size_t pilot_iterations = 50000;
  std::size_t pilot_burn_in = 0;
  std::size_t min_epoch_iterations = 1000;
  bool split_bins = true;
  bool extend_range = true;
  int max_bins = 64;
  // jams
  /// "diagonal" (t 1 for t = -spread..spread) or "uniform" (start_count
  /// draws from [-spread, spread]^d).
  std::string starts = "diagonal";
  int start_count = 7;
  double start_spread = 3.0;
  std::size_t refine_iterations = 5000;
  double jump_probability = 0.1;
  JumpMove jump = JumpMove::affine;
  KernelFamily kernel = KernelFamily::student_t;
  double dof = 7.0;
  // ram
  double scale = 1.0;
  int max_inner = 1000;

  bool operator==(const SamplerSpec&) const = default;
};

/// Structured experiment description, read from sectioned `key = value` text.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  /// Iterations per chain (sweeps for apt).
  std::size_t n_iter = 0;
  std::size_t burn_in = 0;
  int replicates = 1;
  std::string output = "runs";
  /// "zeros", "ones" or a comma-separated vector.
  std::string init = "zeros";
  unsigned threads = 0;  // 0 = MMCMC_THREADS or hardware
  TargetSpec target;
  SamplerSpec sampler;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ParseError carrying the offending line. Unknown sections or keys,
/// keys that do not apply to the chosen family or sampler, duplicates, a
/// missing seed or n_iter and burn_in >= n_iter are all errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text: every applicable key in a fixed order.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace mmcmc::harness
