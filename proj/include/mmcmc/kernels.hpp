#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mmcmc/chain.hpp"
#include "mmcmc/targets.hpp"

namespace mmcmc {

// ---------------------------------------------------------------------------
// Adaptive random-walk Metropolis.

struct RwmSettings {
  double target_acceptance = 0.234;
  /// Robbins-Monro step eta_t = t^-decay.
  double decay = 0.6;
  bool adapt_scale = true;
  bool adapt_covariance = true;
  double jitter = 1e-10;
  /// Pseudo-sample weight of the initial covariance in the running estimate;
  /// 0 selects 10 d.
  double prior_weight = 0.0;
  /// Cholesky factor of the proposal is refreshed every this many updates.
  int refresh_every = 10;
};

/// Proposal N(x, lambda Sigma_P) with running covariance and Robbins-Monro
/// log-scale. Sigma_P starts at I and lambda at 2.38^2 / d.
class AdaptiveRwmState {
 public:
  explicit AdaptiveRwmState(Eigen::Index dimension, RwmSettings settings = {});

  Eigen::Index dimension() const { return mean_.size(); }
  const RwmSettings& settings() const { return settings_; }

  const Matrix& covariance() const { return covariance_; }
  double scale() const;
  double log_scale() const { return log_scale_; }
  Matrix proposal_covariance() const { return scale() * covariance_; }

  void set_log_scale(double v) { log_scale_ = v; }
  /// Replaces Sigma_P; the running estimate restarts from it.
  void set_covariance(const Matrix& sigma);
  /// Covariance adaptation can be supplied externally (shared estimates).
  void set_external_covariance(const Matrix& sigma);

  bool frozen() const { return frozen_; }
  void freeze(bool f = true) { frozen_ = f; }

  /// Number of adaptation updates applied so far (t).
  std::size_t updates() const { return updates_; }
  /// Step size that the next update will use.
  double step_size() const;

  /// Lower-triangular L with L L' = Sigma_P as of the last refresh.
  const Matrix& cholesky_factor() const { return chol_; }

  /// Overall acceptance fraction recorded by `record`.
  double acceptance_rate() const;
  /// Exponentially weighted acceptance (window about 1000 steps).
  double recent_acceptance() const { return recent_; }
  void record(bool accepted);
  void reset_acceptance();

  // Used by rwm_adapt.
  void update_scale(bool accepted);
  void update_covariance(const Vector& x);

 private:
  void refresh_cholesky();

  RwmSettings settings_;
  Matrix covariance_;
  Matrix initial_covariance_;
  Vector mean_;
  Matrix scatter_;
  double sample_count_ = 0.0;
  double log_scale_;
  std::size_t updates_ = 0;
  std::size_t since_refresh_ = 0;
  Matrix chol_;
  bool frozen_ = false;
  std::size_t accepted_ = 0;
  std::size_t attempts_ = 0;
  double recent_ = 0.234;
};

/// Draws y ~ N(x, lambda Sigma_P).
Vector rwm_propose(const Vector& x, const AdaptiveRwmState& a, RngStream& rng);
/// One symmetric RWM accept-reject step; no adaptation.
bool rwm_step(ChainState& state, const TargetModel& target, const AdaptiveRwmState& a,
              RngStream& rng);
/// Robbins-Monro update of log lambda towards the target acceptance and
/// running-covariance update with `new_state`. No-op when frozen.
void rwm_adapt(AdaptiveRwmState& a, bool accepted, const Vector& new_state);

class AdaptiveRwmKernel final : public TransitionKernel {
 public:
  explicit AdaptiveRwmKernel(Eigen::Index dimension, RwmSettings settings = {})
      : state_(dimension, settings) {}
  explicit AdaptiveRwmKernel(AdaptiveRwmState state) : state_(std::move(state)) {}

  StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) override;
  std::string_view tag() const override { return "rwm"; }

  AdaptiveRwmState& adaptation() { return state_; }
  const AdaptiveRwmState& adaptation() const { return state_; }

 private:
  AdaptiveRwmState state_;
};

// ---------------------------------------------------------------------------
// Binary lattices.

/// Resample x_site from its full conditional; updates the cached density.
void gibbs_site_step(ChainState& state, int site, const AutologisticTarget& target,
                     RngStream& rng);
/// Systematic scan over all sites in index order.
void gibbs_sweep(ChainState& state, const AutologisticTarget& target, RngStream& rng);

class GibbsSweepKernel final : public TransitionKernel {
 public:
  StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) override;
  std::string_view tag() const override { return "gibbs"; }
};

/// Metropolis kernel proposing to flip `flips_per_step` uniformly chosen sites,
/// one at a time. This is the random-walk sampler for binary lattices.
class SiteFlipKernel final : public TransitionKernel {
 public:
  explicit SiteFlipKernel(int flips_per_step = 1) : flips_(flips_per_step) {}
  StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) override;
  std::string_view tag() const override { return "flip"; }

 private:
  int flips_;
};

// ---------------------------------------------------------------------------
// Tabular local moves.

/// Uniform proposal over the neighbours of the current index (the target's
/// adjacency, or {i-1, i+1} when none is given), Hastings-corrected for
/// unequal degrees. Proposals outside the state space are rejections.
class TabularNeighbourKernel final : public TransitionKernel {
 public:
  explicit TabularNeighbourKernel(std::vector<std::vector<int>> adjacency = {})
      : adjacency_(std::move(adjacency)) {}

  StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) override;
  std::string_view tag() const override { return "local"; }

  /// q(x, .) over n states; mass of out-of-range moves stays on x.
  std::vector<double> proposal_row(std::size_t x, std::size_t n) const;
  Matrix proposal_matrix(std::size_t n) const;
  std::vector<int> neighbours(std::size_t x) const;

 private:
  std::vector<std::vector<int>> adjacency_;
};

// ---------------------------------------------------------------------------
// Metropolized independence (jump) sampler.

struct JumpComponent {
  double weight = 1.0;
  Vector center;
  Matrix covariance;
  /// Student-t degrees of freedom; 0 means Gaussian.
  double dof = 0.0;
};

/// Mixture of Gaussian / Student-t components, or a probability table over a
/// tabular space.
class JumpProposal {
 public:
  static JumpProposal tabular(std::vector<double> probabilities);
  static JumpProposal mixture(std::vector<JumpComponent> components);

  bool is_tabular() const { return !table_.empty(); }
  Vector sample(RngStream& rng) const;
  double log_density(const Vector& x) const;
  const std::vector<double>& table() const { return table_; }

 private:
  struct Prepared {
    JumpComponent component;
    Matrix chol;
    double log_norm = 0.0;
  };
  std::vector<double> table_;
  std::vector<Prepared> components_;
};

/// Proposes y ~ Q_J independently of x; accepts with
/// min{1, pi(y) Q_J(x) / (pi(x) Q_J(y))}. Throws when Q_J(x) = 0.
bool independence_jump_step(ChainState& state, const TargetModel& target, const JumpProposal& q,
                            RngStream& rng);

class IndependenceJumpKernel final : public TransitionKernel {
 public:
  explicit IndependenceJumpKernel(JumpProposal q) : q_(std::move(q)) {}
  StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) override;
  std::string_view tag() const override { return "jump"; }
  const JumpProposal& proposal() const { return q_; }

 private:
  JumpProposal q_;
};

/// log density of a Gaussian (dof = 0) or multivariate Student-t with scale
/// matrix L L'.
double log_elliptical_density(const Vector& x, const Vector& center, const Matrix& chol,
                              double dof);

}  // namespace mmcmc
