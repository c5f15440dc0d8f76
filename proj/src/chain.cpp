#include "mmcmc/chain.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "mmcmc/error.hpp"

namespace mmcmc {

ChainState ChainState::at(const TargetModel& target, Vector position) {
  ChainState s;
  s.log_density = target.log_density(position);
  s.position = std::move(position);
  return s;
}

void Trace::push_initial(const Vector& x) {
  values_.insert(values_.end(), x.data(), x.data() + x.size());
}

void Trace::push(const Vector& x, StepMeta meta) {
  values_.insert(values_.end(), x.data(), x.data() + x.size());
  meta_.push_back(meta);
}

std::uint16_t Trace::intern_tag(std::string_view tag) {
  for (std::size_t i = 0; i < tags_.size(); ++i)
    if (tags_[i] == tag) return static_cast<std::uint16_t>(i);
  tags_.emplace_back(tag);
  return static_cast<std::uint16_t>(tags_.size() - 1);
}

void Trace::reserve(std::size_t n_states) {
  values_.reserve(n_states * static_cast<std::size_t>(dim_));
  meta_.reserve(n_states);
}

double Trace::acceptance_rate() const {
  if (meta_.empty()) return 0.0;
  std::size_t acc = 0;
  for (const auto& m : meta_) acc += m.accepted ? 1 : 0;
  return static_cast<double>(acc) / static_cast<double>(meta_.size());
}

double mh_acceptance_probability(double log_pi_x, double log_pi_y, double log_q_ratio) {
  if (log_pi_y == kLogZero) return 0.0;
  const double log_ratio = log_pi_y - log_pi_x + log_q_ratio;
  if (log_ratio >= 0.0) return 1.0;
  return std::exp(log_ratio);
}

bool mh_accept(ChainState& state, Proposal proposal, const TargetModel& target, RngStream& rng) {
  if (!std::isfinite(proposal.log_q_ratio))
    throw NumericalError("non-finite proposal density ratio");
  const double log_pi_y = target.log_density(proposal.y);
  if (std::isnan(log_pi_y)) throw NumericalError("log-density returned NaN at proposal");
  const double alpha = mh_acceptance_probability(state.log_density, log_pi_y, proposal.log_q_ratio);
  ++state.iteration;
  if (alpha >= 1.0 || rng.uniform() < alpha) {
    state.position = std::move(proposal.y);
    state.log_density = log_pi_y;
    return true;
  }
  return false;
}

bool mh_step(ChainState& state, const ProposalSampler& propose, const TargetModel& target,
             RngStream& rng) {
  return mh_accept(state, propose(state.position, rng), target, rng);
}

Trace run_chain(const TargetModel& target, TransitionKernel& kernel, const Vector& init,
                std::size_t n_iter, RngStream& rng) {
  Trace trace(init.size(), target.space());
  trace.reserve(n_iter + 1);
  const std::uint16_t tag = trace.intern_tag(kernel.tag());
  ChainState state = ChainState::at(target, init);
  if (state.log_density == kLogZero) throw Error("initial state outside the target support");
  trace.push_initial(state.position);
  for (std::size_t n = 0; n < n_iter; ++n) {
    try {
      const StepInfo info = kernel.step(state, target, rng);
      trace.push(state.position, StepMeta{info.accepted, tag, info.aux_index});
    } catch (const NumericalError& e) {
      trace.mark_failed("iteration " + std::to_string(n + 1) + ": " + e.what());
      break;
    }
  }
  return trace;
}

Vector ergodic_average(const Trace& trace, const std::function<Vector(const Vector&)>& f,
                       std::size_t first) {
  if (trace.size() <= first) throw Error("ergodic_average: empty trace");
  Vector sum;
  for (std::size_t n = first; n < trace.size(); ++n) {
    const Vector v = f(trace.state(n));
    if (!v.allFinite())
      throw NumericalError("ergodic_average: non-finite value at iteration " + std::to_string(n));
    if (sum.size() == 0)
      sum = v;
    else
      sum += v;
  }
  return sum / static_cast<double>(trace.size() - first);
}

Vector ergodic_mean(const Trace& trace, std::size_t first) {
  if (trace.size() <= first) throw Error("ergodic_mean: empty trace");
  Vector sum = Vector::Zero(trace.dimension());
  for (std::size_t n = first; n < trace.size(); ++n) sum += trace.state(n);
  return sum / static_cast<double>(trace.size() - first);
}

void write_trace_csv(const Trace& trace, std::ostream& out, const std::vector<double>* weights) {
  if (weights && weights->size() != trace.size()) throw Error("write_trace_csv: one weight per state required");
  out << "iter,accepted,kernel_tag,aux_index";
  for (Eigen::Index j = 0; j < trace.dimension(); ++j) out << ",x_" << j;
  if (weights) out << ",weight";
  out << '\n';
  const bool integral = trace.space() != StateSpace::continuous;
  const auto old_precision = out.precision(17);
  for (std::size_t n = 0; n < trace.size(); ++n) {
    out << n << ',';
    if (n == 0) {
      out << ",init,";
    } else {
      const StepMeta& m = trace.meta()[n - 1];
      out << (m.accepted ? 1 : 0) << ',' << trace.tags()[m.tag] << ',';
      if (m.aux_index) out << *m.aux_index;
    }
    const auto x = trace.state(n);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      out << ',';
      if (integral)
        out << static_cast<long long>(std::llround(x[j]));
      else
        out << x[j];
    }
    if (weights) out << ',' << (*weights)[n];
    out << '\n';
  }
  if (trace.failure()) out << "# FAILED " << *trace.failure() << '\n';
  out.precision(old_precision);
}

unsigned worker_threads() {
  if (const char* env = std::getenv("MMCMC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned count = std::min<std::size_t>(threads, n);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mmcmc
