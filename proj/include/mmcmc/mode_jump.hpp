#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mmcmc/diagnostics.hpp"
#include "mmcmc/kernels.hpp"

namespace mmcmc {

// ---------------------------------------------------------------------------
// Optimization

struct AscentOptions {
  int max_iterations = 20000;
  double gradient_tolerance = 1e-8;
  double initial_step = 1e-2;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct AscentResult {
  Vector mode;
  double log_density = kLogZero;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Ascent on log pi with Barzilai-Borwein steps and Armijo backtracking,
/// stopping when |grad log pi| < gradient_tolerance.
AscentResult gradient_ascent(const Vector& x0, const TargetModel& target,
                             const AscentOptions& options = {});

enum class StationaryKind { maximum, minimum, saddle, degenerate };
std::string_view to_string(StationaryKind k);

struct StationaryPoint {
  Vector x;
  double log_density = 0.0;
  StationaryKind kind = StationaryKind::degenerate;
  /// Eigenvalues of the Hessian of log pi, ascending.
  Vector hessian_eigenvalues;
};

struct StationaryOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  /// Points closer than this (Euclidean) are merged.
  double merge_radius = 1e-5;
  /// Eigenvalues within this of zero make a point degenerate.
  double eigen_tolerance = 1e-8;
  /// Iterates beyond this norm are abandoned: on heavy-tailed targets the
  /// gradient vanishes at infinity without a stationary point there.
  double escape_radius = 1e6;
};

/// Damped Newton iterations on grad log pi = 0 from each start (finite
/// difference Hessian); converged roots are classified and deduplicated.
std::vector<StationaryPoint> find_stationary_points(const TargetModel& target,
                                                    const std::vector<Vector>& starts,
                                                    const StationaryOptions& options = {});

// ---------------------------------------------------------------------------
// Mode atlas

enum class KernelFamily { gaussian, student_t };
std::string_view to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view name);

/// Mode centres with local covariances, weights and a common elliptical
/// kernel family kappa_i.
class ModeAtlas {
 public:
  ModeAtlas() = default;
  ModeAtlas(std::vector<Vector> centers, std::vector<Matrix> covariances, std::vector<double> weights,
            KernelFamily family = KernelFamily::student_t, double dof = 7.0);

  std::size_t size() const { return centers_.size(); }
  Eigen::Index dimension() const { return centers_.empty() ? 0 : centers_.front().size(); }
  const Vector& center(std::size_t i) const { return centers_[i]; }
  const Matrix& covariance(std::size_t i) const { return covariances_[i]; }
  /// Lower Cholesky factor of covariance(i).
  const Matrix& cholesky(std::size_t i) const { return cholesky_[i]; }
  /// log |covariance(i)|^{1/2}
  double log_det_half(std::size_t i) const { return log_det_half_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  KernelFamily family() const { return family_; }
  /// Degrees of freedom of the Student-t family (0 for Gaussian).
  double dof() const { return family_ == KernelFamily::gaussian ? 0.0 : dof_; }

  void set_covariance(std::size_t i, Matrix covariance);
  void set_family(KernelFamily family, double dof = 7.0);
  /// log kappa_i(x), a normalized density.
  double log_kernel(std::size_t i, const Vector& x) const;
  /// L_i^{-1} (x - nu_i)
  Vector whiten(std::size_t i, const Vector& x) const;

  bool operator==(const ModeAtlas& o) const;

 private:
  std::vector<Vector> centers_;
  std::vector<Matrix> covariances_;
  std::vector<Matrix> cholesky_;
  std::vector<double> log_det_half_;
  std::vector<double> weights_;
  KernelFamily family_ = KernelFamily::student_t;
  double dof_ = 7.0;
};

/// JSON text: dimension, family, dof and per-mode center, row-major
/// covariance and weight.
std::string serialize_atlas(const ModeAtlas& atlas);
ModeAtlas parse_atlas(std::string_view text);

struct FindModesOptions {
  AscentOptions ascent;
  /// Merge radius in whitened coordinates; negative means 1e-3 sqrt(d).
  double dedup_radius = -1.0;
  KernelFamily family = KernelFamily::student_t;
  double dof = 7.0;
};

/// Multistart gradient ascent. Converged end points with a negative-definite
/// finite-difference Hessian become modes with covariance (-H)^{-1}; modes
/// within the dedup radius merge (higher density kept). Modes are sorted
/// lexicographically and weighted uniformly. Throws if no start converges.
ModeAtlas find_modes(const TargetModel& target, const std::vector<Vector>& starts,
                     const FindModesOptions& options = {});

// ---------------------------------------------------------------------------
// JAMS

/// log pi(x) + log w_i + log kappa_i(x) - log sum_j w_j kappa_j(x).
double jams_augmented_logdensity(double log_pi, const Vector& x, std::size_t i,
                                 const ModeAtlas& atlas);
double jams_augmented_logdensity(const Vector& x, std::size_t i, const ModeAtlas& atlas,
                                 const TargetModel& target);

struct JamsState {
  Vector x;
  std::size_t mode = 0;
  double log_pi = kLogZero;
  double log_augmented = kLogZero;
  std::size_t iteration = 0;
};

JamsState make_jams_state(const Vector& x, std::size_t mode, const ModeAtlas& atlas,
                          const TargetModel& target);

/// RWM step on x at fixed mode with the mode's own adaptation state.
bool jams_local_step(JamsState& s, const ModeAtlas& atlas, const TargetModel& target,
                     AdaptiveRwmState& mode_rwm, RngStream& rng);

enum class JumpMove { affine, independent };

/// Mode switch i -> i' (uniform over the others). The affine move maps
/// x' = nu_i' + L_i' L_i^{-1} (x - nu_i) with Jacobian |L_i'| / |L_i|; the
/// independent move draws x' ~ kappa_i'.
bool jams_jump_step(JamsState& s, const ModeAtlas& atlas, const TargetModel& target,
                    RngStream& rng, JumpMove move = JumpMove::affine);

/// Exact frozen local kernel for fixed mode i on a finite space whose state
/// k sits at the point k of a one-dimensional atlas.
ExactKernelMatrix jams_exact_local_matrix(const std::vector<double>& log_pi, const ModeAtlas& atlas,
                                          std::size_t mode, const Matrix& proposal);

struct JamsConfig {
  FindModesOptions modes;
  /// Per-mode refinement iterations (phase 2).
  std::size_t refine_iterations = 5000;
  std::size_t iterations = 100000;
  std::size_t burn_in = 0;
  double jump_probability = 0.1;
  JumpMove jump = JumpMove::affine;
  /// Covariance jitter added to refined per-mode covariances.
  double covariance_jitter = 1e-9;
  RwmSettings rwm;
  unsigned threads = 1;
};

struct JamsResult {
  /// aux_index holds the mode index; tags "local" and "jump".
  Trace trace;
  /// Atlas after mode finding and after refinement.
  std::vector<ModeAtlas> atlas_history;
  ModeAtlas atlas;
  std::vector<double> local_acceptance;  // per mode
  double jump_acceptance = 0.0;
  std::size_t jump_attempts = 0;
};

JamsResult jams_run(const TargetModel& target, const std::vector<Vector>& starts,
                    const JamsConfig& config, std::uint64_t seed);
/// Runs phases 2 and 3 from a given atlas.
JamsResult jams_run(const TargetModel& target, const ModeAtlas& atlas, const JamsConfig& config,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Repelling-attracting Metropolis

struct RamConfig {
  /// Standard deviation of the Gaussian R (continuous) or maximum integer
  /// step of the uniform R (tabular).
  double scale = 1.0;
  int max_inner = 1000;
};

struct RamProposal {
  Vector y;
  Vector z;  // downhill intermediate
  double log_pi_y = kLogZero;
  double log_pi_z = kLogZero;
  bool ok = false;  // false when an inner budget ran out
  int down_draws = 0;
  int up_draws = 0;
};

/// Draw from R(x, .)
Vector ram_draw(const Vector& x, const TargetModel& target, const RamConfig& cfg, RngStream& rng);

/// Forced downhill z from x (accept with min{1, pi(x)/pi(z)}), then forced
/// uphill y from z (accept with min{1, pi(y)/pi(z)}).
RamProposal ram_propose(const Vector& x, double log_pi_x, const TargetModel& target,
                        const RamConfig& cfg, RngStream& rng);

struct RamStepInfo {
  bool accepted = false;
  bool budget_exhausted = false;
};

/// One step on the extended target pi(x) R(x, z): z is refreshed from R(x, .),
/// the forced down-up proposal gives y, a forced downhill draw z' from y
/// completes the move, and (y, z') is accepted with probability
/// min{1, pi(y) a(x, z) / (pi(x) a(y, z'))}, a(u, v) = min{1, pi(u)/pi(v)}.
RamStepInfo ram_step(ChainState& state, const TargetModel& target, const RamConfig& cfg,
                     RngStream& rng);

class RamKernel final : public TransitionKernel {
 public:
  explicit RamKernel(RamConfig cfg) : cfg_(cfg) {}
  StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) override;
  std::string_view tag() const override { return "ram"; }
  std::size_t budget_failures() const { return failures_; }

 private:
  RamConfig cfg_;
  std::size_t failures_ = 0;
};

}  // namespace mmcmc
