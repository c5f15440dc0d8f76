#pragma once

#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include "mmcmc/diagnostics.hpp"
#include "mmcmc/kernels.hpp"

namespace mmcmc {

/// Inverse temperatures 1 = beta_1 > ... > beta_L > 0, parameterized by
/// rho_l = log log(beta_l / beta_{l+1}) so that any real rho gives a valid ladder.
class TemperatureLadder {
 public:
  explicit TemperatureLadder(std::vector<double> betas);
  /// beta_l = beta_min^((l-1)/(L-1)).
  static TemperatureLadder geometric(int levels, double beta_min = 0.005);

  int levels() const { return static_cast<int>(betas_.size()); }
  /// Level index is 0-based here; level 0 is the target.
  double beta(int level) const { return betas_[static_cast<std::size_t>(level)]; }
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& spacing() const { return rho_; }
  void set_spacing(std::vector<double> rho);

  /// Swap statistics per adjacent pair (pair p couples levels p and p+1).
  void record_swap(int pair, double alpha, bool accepted);
  std::size_t attempts(int pair) const { return attempts_[static_cast<std::size_t>(pair)]; }
  /// Fraction of accepted swaps since the last reset.
  double acceptance(int pair) const;
  /// Mean swap acceptance probability since the last reset.
  double mean_alpha(int pair) const;
  void reset_statistics();

 private:
  void rebuild();

  std::vector<double> betas_;
  std::vector<double> rho_;
  std::vector<std::size_t> attempts_;
  std::vector<std::size_t> accepted_;
  std::vector<double> alpha_sum_;
};

/// min{1, exp[(beta_l - beta_{l+1}) (logpi_{l+1} - logpi_l)]}.
double swap_acceptance(double beta_l, double beta_next, double log_pi_l, double log_pi_next);

enum class SwapSchedule { uniform_random_pair, even, odd, deo };

SwapSchedule parse_swap_schedule(std::string_view name);
std::string_view to_string(SwapSchedule s);

/// 0-based pair indices attempted in a sweep. Pair p swaps levels p+1 and p+2
/// in 1-based numbering; the odd set holds pairs (1,2), (3,4), ...; the even
/// set (2,3), (4,5), .... The deo schedule applies the even set on even
/// (0-based) sweeps and the odd set on odd sweeps.
std::vector<int> scheduled_pairs(SwapSchedule schedule, int levels, std::size_t sweep,
                                 RngStream& rng);

/// Chains at each temperature level together with their kernels.
struct ReplicaEnsemble {
  std::vector<ChainState> states;  // by level; cached log-density is tempered
  std::vector<double> base_log_density;  // log pi at each level's state
  std::vector<std::unique_ptr<TransitionKernel>> kernels;
  std::vector<int> labels;  // labels[level] = replica currently at that level, 1..L
  std::vector<RngStream> streams;
  std::vector<TemperedTarget> targets;
};

/// Ensemble with one AdaptiveRwmKernel per level, all levels started at `init`.
ReplicaEnsemble make_rwm_ensemble(const TargetModel& target, const TemperatureLadder& ladder,
                                  const std::vector<Vector>& inits, std::uint64_t seed,
                                  RwmSettings settings = {});

/// One kernel step per level on pi^beta_l, each with its own stream.
/// `threads` > 1 runs levels concurrently; the result does not depend on it.
std::vector<bool> propagate(ReplicaEnsemble& ensemble, unsigned threads = 1);

struct SwapOutcome {
  int pair = 0;
  double alpha = 0.0;
  bool accepted = false;
};

/// Attempts the scheduled swaps; records statistics in `ladder`.
std::vector<SwapOutcome> swap_sweep(ReplicaEnsemble& ensemble, TemperatureLadder& ladder,
                                    SwapSchedule schedule, std::size_t sweep, RngStream& rng);

/// Robbins-Monro step rho_p += eta_t (alpha_p - target) for every observed pair.
void adapt_ladder(TemperatureLadder& ladder, const std::vector<SwapOutcome>& observed,
                  std::size_t t, double decay = 0.6, double target = 0.234);

/// Refreshes cached tempered densities after the ladder changed.
void retemper(ReplicaEnsemble& ensemble, const TemperatureLadder& ladder);

struct PtOptions {
  SwapSchedule schedule = SwapSchedule::deo;
  bool adapt = true;
  /// With adapt set, false keeps the ladder fixed while proposals still adapt.
  bool adapt_ladder = true;
  /// Adaptation stops after this many sweeps (0 = never stops).
  std::size_t adapt_sweeps = 0;
  bool common_covariance = false;
  int local_steps = 1;
  double decay = 0.6;
  double target_swap = 0.234;
  RwmSettings rwm;
  std::size_t ladder_record_every = 100;
  unsigned threads = 1;
};

struct PtResult {
  Trace cold;
  ReplicaIndexTrace replicas;
  std::vector<std::vector<double>> ladder_history;
  TemperatureLadder ladder;
  std::vector<double> level_acceptance;
};

PtResult pt_run(const TargetModel& target, TemperatureLadder ladder, std::size_t n_sweeps,
                const std::vector<Vector>& inits, const PtOptions& options, std::uint64_t seed);

/// Replica-index CSV: `sweep,temp_level_1..temp_level_L`.
void write_replica_csv(const ReplicaIndexTrace& trace, std::ostream& out);

/// Exact joint kernel (propagate then swap of levels 1 and 2) for L = 2 on a
/// tabular target whose local moves use `proposal` at both temperatures.
ExactKernelMatrix pt_exact_joint_matrix(const std::vector<double>& log_pi, const Matrix& proposal,
                                        double beta_1, double beta_2);

}  // namespace mmcmc
