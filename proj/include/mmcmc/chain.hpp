#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmcmc/rng.hpp"
#include "mmcmc/target.hpp"

namespace mmcmc {

/// Current position of a chain with its cached log-density.
struct ChainState {
  Vector position;
  double log_density = kLogZero;
  std::size_t iteration = 0;

  static ChainState at(const TargetModel& target, Vector position);
};

/// Outcome of one kernel application.
struct StepInfo {
  bool accepted = false;
  std::optional<std::int32_t> aux_index;
};

/// Markov transition kernel. Adaptive kernels update their own state inside
/// `step` unless frozen.
class TransitionKernel {
 public:
  virtual ~TransitionKernel() = default;
  virtual StepInfo step(ChainState& state, const TargetModel& target, RngStream& rng) = 0;
  virtual std::string_view tag() const = 0;
};

struct StepMeta {
  bool accepted = false;
  std::uint16_t tag = 0;
  std::optional<std::int32_t> aux_index;
};

/// Time-ordered chain states, stored row-major in one flat buffer.
class Trace {
 public:
  Trace() = default;
  Trace(Eigen::Index dimension, StateSpace space) : dim_(dimension), space_(space) {}

  Eigen::Index dimension() const { return dim_; }
  StateSpace space() const { return space_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return values_.empty(); }

  Eigen::Map<const Vector> state(std::size_t i) const {
    return Eigen::Map<const Vector>(values_.data() + i * static_cast<std::size_t>(dim_), dim_);
  }
  const std::vector<StepMeta>& meta() const { return meta_; }
  const std::vector<std::string>& tags() const { return tags_; }

  void push_initial(const Vector& x);
  void push(const Vector& x, StepMeta meta);
  std::uint16_t intern_tag(std::string_view tag);
  void reserve(std::size_t n_states);

  const std::optional<std::string>& failure() const { return failure_; }
  void mark_failed(std::string message) { failure_ = std::move(message); }

  /// Fraction of recorded steps flagged as accepted.
  double acceptance_rate() const;

 private:
  Eigen::Index dim_ = 0;
  StateSpace space_ = StateSpace::continuous;
  std::vector<double> values_;
  std::vector<StepMeta> meta_;
  std::vector<std::string> tags_;
  std::optional<std::string> failure_;
};

/// Proposed point and log[q(y, x) / q(x, y)] (zero for symmetric proposals).
struct Proposal {
  Vector y;
  double log_q_ratio = 0.0;
};

using ProposalSampler = std::function<Proposal(const Vector& x, RngStream& rng)>;

/// min{1, exp(log_pi_y - log_pi_x + log_q_ratio)}; zero when y is out of support.
double mh_acceptance_probability(double log_pi_x, double log_pi_y, double log_q_ratio);

/// Accept-reject a given proposal. Throws NumericalError on a non-finite
/// proposal ratio or a NaN log-density.
bool mh_accept(ChainState& state, Proposal proposal, const TargetModel& target, RngStream& rng);

/// Draw from `propose` and accept-reject.
bool mh_step(ChainState& state, const ProposalSampler& propose, const TargetModel& target,
             RngStream& rng);

/// Run `n_iter` kernel steps from `init`. A NumericalError stops the run and
/// the partial trace is returned with a failure marker.
Trace run_chain(const TargetModel& target, TransitionKernel& kernel, const Vector& init,
                std::size_t n_iter, RngStream& rng);

/// (m + 1)^-1 sum f(X_n) over states [first, size).
Vector ergodic_average(const Trace& trace, const std::function<Vector(const Vector&)>& f,
                       std::size_t first = 0);
/// Identity test function.
Vector ergodic_mean(const Trace& trace, std::size_t first = 0);

/// CSV with header `iter,accepted,kernel_tag,aux_index,x_0..x_{d-1}`. The row
/// for iteration 0 is the initial state with empty accepted/aux fields.
/// With `weights`, a trailing `weight` column is added.
void write_trace_csv(const Trace& trace, std::ostream& out,
                     const std::vector<double>* weights = nullptr);

/// Number of worker threads: MMCMC_THREADS if set, else hardware concurrency.
unsigned worker_threads();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled by exactly one worker; results must be written to index-owned slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = worker_threads());

}  // namespace mmcmc
