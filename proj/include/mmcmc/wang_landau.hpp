#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "mmcmc/diagnostics.hpp"
#include "mmcmc/kernels.hpp"

namespace mmcmc {

/// Histogram bins over the reaction coordinate with log-bias weights and
/// per-epoch occupancy counters.
class BiasPotential {
 public:
  /// `bins` equal-width bins on [z_min, z_max].
  BiasPotential(double z_min, double z_max, int bins, double eta0 = 1.0);
  /// Explicit strictly increasing edges (J + 1 values).
  explicit BiasPotential(std::vector<double> edges, double eta0 = 1.0);

  int bins() const { return static_cast<int>(theta_.size()); }
  double z_min() const { return edges_.front(); }
  double z_max() const { return edges_.back(); }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& theta() const { return theta_; }
  void set_theta(std::vector<double> theta);

  double eta() const { return eta_; }
  int epoch() const { return epoch_; }

  /// Visits recorded in the current epoch.
  const std::vector<double>& counts() const { return counts_; }
  double total_count() const;
  /// counts normalized to sum 1 (uniform when empty).
  std::vector<double> occupancy() const;
  /// Reaction-coordinate values recorded per bin in the current epoch.
  const std::vector<std::vector<double>>& samples() const { return samples_; }
  std::size_t out_of_range() const { return out_of_range_; }
  /// Bins that have received at least one visit since construction.
  const std::vector<char>& visited() const { return visited_; }

  void record(int bin, double z, bool out_of_range = false);
  /// Starts a new epoch: eta halves, counters reset.
  void next_epoch();
  /// Replaces bin j by two bins split at `at`; both inherit theta(j).
  void split(int bin, double at, double new_lo, double new_hi);
  void recenter();
  void add_to_theta(int bin, double delta) { theta_[static_cast<std::size_t>(bin)] += delta; }

 private:
  std::vector<double> edges_;
  std::vector<double> theta_;
  std::vector<double> counts_;
  std::vector<std::vector<double>> samples_;
  std::vector<char> visited_;
  double eta_;
  int epoch_ = 0;
  std::size_t out_of_range_ = 0;
};

/// Reaction coordinate given the state and its log-density.
using ReactionCoordinate = std::function<double(const Vector& x, double log_pi)>;

/// -log pi(x); the default coordinate.
double reaction_coordinate(const Vector& x, const TargetModel& target);
ReactionCoordinate negative_log_density();

struct BinLookup {
  int bin = 0;
  bool out_of_range = false;
};

/// Half-open bin containing z; values outside [z_min, z_max] clamp to the
/// first or last bin with the flag set.
BinLookup bin_index(double z, const BiasPotential& bias);

/// State of one Wang-Landau chain; the density cache holds log pi, not the
/// biased density.
struct WlChain {
  ChainState state;
  double xi = 0.0;
  BinLookup bin;
};

WlChain make_wl_chain(const TargetModel& target, const Vector& x, const BiasPotential& bias,
                      const ReactionCoordinate& xi = negative_log_density());

/// Proposal with the proposed point's log-density and log[q(y,x)/q(x,y)].
struct WlProposal {
  Vector y;
  double log_pi_y = kLogZero;
  double log_q_ratio = 0.0;
};
using WlProposer = std::function<WlProposal(const ChainState& x, RngStream& rng)>;

/// Local proposals matching the target's space: adaptive-RWM Gaussian steps
/// (continuous), single-site flips (binary lattice) or neighbour moves (tabular).
WlProposer rwm_proposer(const TargetModel& target, const AdaptiveRwmState& a);
WlProposer flip_proposer(const TargetModel& target);
WlProposer neighbour_proposer(const TargetModel& target, const TabularNeighbourKernel& k);

/// min{1, exp[(log pi_y - theta(J(y))) - (log pi_x - theta(J(x))) + log_q_ratio]}.
double wl_acceptance_probability(double log_pi_x, double log_pi_y, double xi_x, double xi_y,
                                 const BiasPotential& bias, double log_q_ratio = 0.0);

/// Metropolis step on the biased target pi(x) exp(-theta(J(xi(x)))).
bool wl_step(WlChain& chain, const BiasPotential& bias, const WlProposer& propose,
             RngStream& rng, const ReactionCoordinate& xi = negative_log_density());

enum class BiasUpdate { pawl, classical };

/// theta(j) += eta (nu(j) - 1/J) with nu the fraction of `visited` in bin j,
/// then recentred to mean zero. Visits are added to the epoch counters.
/// The classical rule adds eta to each visited bin instead.
void update_bias(BiasPotential& bias, const std::vector<int>& visited,
                 const std::vector<double>& xi_values, BiasUpdate rule = BiasUpdate::pawl);

/// max_j |nu(j) - 1/J| < c/J over the epoch counters; on success the epoch
/// advances, eta halves and the counters reset. False with fewer than J visits.
/// With `visited_only`, J counts only bins ever visited (at least two), so
/// bins holding no reachable state do not block the criterion.
bool flat_histogram(BiasPotential& bias, double c = 0.9, bool visited_only = false);

/// Splits every bin with >= min_samples values in the epoch when more than
/// `threshold` of them fall on one side of the bin midpoint. Returns the
/// number of splits. With `extend_range`, boundary bins use the observed
/// range of their values and may grow past [z_min, z_max].
int maybe_split_bin(BiasPotential& bias, std::size_t min_samples = 100, double threshold = 0.9,
                    int max_bins = 64, bool extend_range = true);

/// Normalized weights proportional to exp(theta(J(xi_n))).
std::vector<double> importance_reweight(const std::vector<double>& xi_values,
                                        const BiasPotential& bias);

/// Biased log-target for a tabular space: log pi(i) - theta(J(xi(i))).
std::vector<double> wl_biased_log_target(const std::vector<double>& log_pi,
                                         const BiasPotential& bias);

/// Exact frozen-bias kernel matrix assembled from wl_acceptance_probability.
ExactKernelMatrix wl_exact_matrix(const std::vector<double>& log_pi, const Matrix& proposal,
                                  const BiasPotential& bias);

struct PawlConfig {
  int chains = 4;
  int initial_bins = 10;
  double flat_c = 0.9;
  /// Iterations an epoch must last before the flat-histogram check applies.
  std::size_t min_epoch_iterations = 1000;
  double eta0 = 1.0;
  std::size_t pilot_iterations = 20000;
  /// Leading pilot iterations left out of the [z_min, z_max] range.
  std::size_t pilot_burn_in = 0;
  /// Iterations per chain after the pilot.
  std::size_t iterations = 100000;
  std::size_t burn_in = 0;
  bool split_bins = true;
  /// Let the boundary bins grow past the pilot range when they split.
  bool extend_range = true;
  std::size_t split_every = 1000;
  int max_bins = 64;
  BiasUpdate rule = BiasUpdate::pawl;
  /// Store chain states every `thin` iterations (0 = keep only xi).
  std::size_t thin = 1;
  /// Site flips per iteration on binary lattices.
  int flips_per_step = 1;
  RwmSettings rwm;
  unsigned threads = 1;
};

struct BiasHistoryRow {
  int epoch = 0;
  double eta = 0.0;
  double bin_lo = 0.0;
  double bin_hi = 0.0;
  double theta = 0.0;
  double occupancy = 0.0;
};

struct PawlResult {
  /// Stored states of all chains (chain-major within each stored iteration).
  Trace samples;
  std::vector<double> sample_xi;
  std::vector<double> weights;
  /// Reaction coordinate of every chain at every post-pilot iteration.
  std::vector<double> xi_all;
  std::vector<double> pilot_xi;
  BiasPotential bias;
  /// One block of rows per completed epoch (its step size, the bias at its
  /// end and its occupancies) and a final block for the running epoch.
  std::vector<BiasHistoryRow> bias_history;
  std::vector<std::vector<double>> occupancy_history;
  int epoch_transitions = 0;
  double acceptance = 0.0;
};

/// Pilot chain with the plain local kernel sets [z_min, z_max], then M chains
/// sample the biased target with a shared, adaptively updated bias.
PawlResult pawl_run(const TargetModel& target, const Vector& init, const PawlConfig& config,
                    std::uint64_t seed, const ReactionCoordinate& xi = negative_log_density());

/// Weighted average of the stored samples.
Vector weighted_mean(const PawlResult& r);

/// `epoch,eta,bin_lo,bin_hi,theta,occupancy`.
void write_bias_csv(const std::vector<BiasHistoryRow>& rows, std::ostream& out);

}  // namespace mmcmc
