#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmcmc/chain.hpp"
#include "mmcmc/harness/config.hpp"
#include "mmcmc/harness/data.hpp"

namespace mmcmc::harness {

/// Target built from a TargetSpec.
struct TargetBundle {
  std::unique_ptr<TargetModel> model;
  /// Exact mean when known (mixture, tabular).
  std::optional<Vector> mean;
  /// Observed image for autologistic targets.
  std::optional<BinaryGrid> image;
};

/// Relative image paths resolve against `base_dir`.
TargetBundle make_target(const TargetSpec& spec, const std::filesystem::path& base_dir = {});

/// Starting state from the `init` key: "zeros", "ones", "observed" (the
/// autologistic image) or a comma-separated vector.
Vector initial_state(const ExperimentConfig& config, const TargetBundle& target);

/// Seed of replicate r, derived from the experiment seed.
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

using NamedValues = std::vector<std::pair<std::string, double>>;

struct SamplerRun {
  /// Chain states; PAWL stores pooled chains and `weights`.
  Trace trace;
  std::vector<double> weights;
  /// Index of the first post-burn-in state in `trace`.
  std::size_t first = 0;
  /// Reaction coordinate -log pi over the run (all PAWL chains).
  std::vector<double> xi;
  std::size_t xi_first = 0;
  /// Sampler-specific summaries.
  NamedValues diagnostics;
  /// Extra CSV outputs by file stem (ladder, replicas, bias history, atlas).
  std::vector<std::pair<std::string, std::string>> files;
  double seconds = 0.0;
};

/// Runs the configured sampler once. Throws Error on samplers that do not
/// apply to the target's state space.
SamplerRun run_sampler(const ExperimentConfig& config, const TargetBundle& target, const Vector& init,
                       std::uint64_t seed);

/// Estimated mean: weighted for PAWL, ergodic otherwise.
Vector estimated_mean(const SamplerRun& run);

/// Git blob hash (SHA-1 of "blob <size>\0" + text), lowercase hex.
std::string content_hash(const std::string& text);

/// Writes, under config.output: config.ini, manifest.json and per replicate
/// trace_rK.csv, diagnostics_rK.json plus sampler-specific files. Relative
/// image paths resolve against `base_dir`. Returns the directory.
std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::filesystem::path& base_dir = {});
std::filesystem::path run_experiment(const std::string& config_path);

}  // namespace mmcmc::harness
