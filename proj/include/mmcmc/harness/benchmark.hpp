#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmcmc/harness/experiment.hpp"
#include "mmcmc/mode_jump.hpp"
#include "mmcmc/targets.hpp"

namespace mmcmc::harness {

// ---------------------------------------------------------------------------
// Mixture benchmark

struct BenchmarkRecord {
  std::string sampler;
  int dimension = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  double rmse_over_sqrt_d = 0.0;
  double seconds = 0.0;
  NamedValues diagnostics;
};

/// Protocol for one sampler on the d-dimensional benchmark mixture, all
/// started at the origin:
///   rwm   500,000 adaptive RWM iterations;
///   apt   150,000 sweeps, 5 levels, 40 local steps per sweep, adaptation
///         during the first 20,000 sweeps, which are discarded;
///   pawl  50,000 pilot iterations, 10 initial bins, 4 chains x 125,000;
///   jams  modes from the starts t 1, t = -3..3, 5,000 refinement
///         iterations per mode and 100,000 main iterations.
ExperimentConfig mixture_benchmark_config(SamplerKind sampler, int dimension, std::uint64_t seed);

struct MixtureBenchmarkOptions {
  std::vector<int> dimensions{2, 4, 8, 16};
  std::vector<SamplerKind> samplers{SamplerKind::rwm, SamplerKind::apt, SamplerKind::pawl, SamplerKind::jams};
  int replicates = 3;
  std::uint64_t seed = 20240501;
  unsigned threads = 0;
};

BenchmarkRecord run_mixture_cell(SamplerKind sampler, int dimension, int replicate, std::uint64_t seed);
/// One record per (sampler, dimension, replicate); cells run in parallel.
std::vector<BenchmarkRecord> mixture_benchmark(const MixtureBenchmarkOptions& options);

/// `sampler,dimension,replicate,seed,rmse_over_sqrt_d,seconds`
void write_results_csv(const std::vector<BenchmarkRecord>& records, std::ostream& out);
std::vector<BenchmarkRecord> read_results_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Autologistic energy exploration: PAWL against RWM at a matched budget.

struct IsingBenchmarkOptions {
  int height = 16;
  int width = 16;
  double alpha = 1.0;
  double beta = 0.7;
  /// Observed image file; empty uses synth_ice(height, width, image_seed).
  std::string image;
  std::uint64_t image_seed = 1;
  std::uint64_t seed = 1;
  int chains = 4;
  int initial_bins = 10;
  std::size_t pilot_iterations = 20000;
  std::size_t iterations = 200000;
  /// Leading fraction of every chain left out of the visited ranges.
  double burn_in_fraction = 0.2;
  unsigned threads = 0;
};

struct IsingBenchmarkResult {
  /// Post-burn-in xi of all chains.
  std::vector<double> pawl_xi;
  std::vector<double> rwm_xi;
  double pawl_min = 0.0, pawl_max = 0.0;
  double rwm_min = 0.0, rwm_max = 0.0;
  int epoch_transitions = 0;
  int bins = 0;
  double pawl_seconds = 0.0;
  double rwm_seconds = 0.0;

  double pawl_range() const { return pawl_max - pawl_min; }
  double rwm_range() const { return rwm_max - rwm_min; }
};

/// Both samplers start from the all-zero image. RWM runs `chains` single-site
/// flip chains of iterations + pilot_iterations / chains steps, so the total
/// number of proposals equals PAWL's.
IsingBenchmarkResult ising_benchmark(const IsingBenchmarkOptions& options);

/// `sampler,xi`, every `thin`-th value.
void write_xi_csv(const IsingBenchmarkResult& r, std::ostream& out, std::size_t thin = 10);

// ---------------------------------------------------------------------------
// SUR profile likelihood

struct SurBenchmarkOptions {
  std::uint64_t seed = 7;
  /// Starts on a grid of spacing 1 over [-grid_half_width, grid_half_width]^2.
  int grid_half_width = 4;
  std::size_t sweeps = 60000;
  std::size_t adapt_sweeps = 10000;
  /// Fixed geometric ladder: pi^beta has polynomial tails and is improper
  /// for small beta, so the ladder is not adapted.
  int levels = 5;
  double beta_min = 0.2;
  /// Every thin-th post-adaptation cold state is assigned to a basin.
  std::size_t thin = 10;
};

struct SurBenchmarkResult {
  ModeAtlas modes;
  std::vector<StationaryPoint> stationary;
  IglsResult igls;
  /// Index of the mode igls converged to, -1 if none.
  int igls_mode = -1;
  /// Fraction of assigned cold-chain states in the basin of each mode.
  std::vector<double> basin_frequency;
  /// States whose ascent did not reach a known mode.
  double unassigned = 0.0;
  std::vector<double> swap_acceptance;
  double seconds = 0.0;
};

SurBenchmarkResult sur_benchmark(const SurData& data, const SurBenchmarkOptions& options = {});

/// Local maxima of the log-density over a dense n x n grid on [lo, hi]^2
/// (strict against all 8 neighbours).
std::vector<Vector> grid_local_maxima(const TargetModel& target, double lo, double hi, int n);

}  // namespace mmcmc::harness
