#include "mmcmc/tempering.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mmcmc/error.hpp"

namespace mmcmc {

TemperatureLadder::TemperatureLadder(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw Error("temperature ladder needs at least one level");
  if (betas_.size() > 32) throw Error("temperature ladder supports at most 32 levels");
  if (betas_.front() != 1.0) throw Error("temperature ladder must start at beta = 1");
  for (std::size_t l = 1; l < betas_.size(); ++l)
    if (!(betas_[l] > 0.0 && betas_[l] < betas_[l - 1]))
      throw Error("inverse temperatures must be positive and strictly decreasing");
  rho_.resize(betas_.size() - 1);
  for (std::size_t l = 0; l + 1 < betas_.size(); ++l)
    rho_[l] = std::log(std::log(betas_[l] / betas_[l + 1]));
  reset_statistics();
}

TemperatureLadder TemperatureLadder::geometric(int levels, double beta_min) {
  if (levels < 1) throw Error("ladder needs at least one level");
  if (!(beta_min > 0.0 && beta_min < 1.0)) throw Error("beta_min must lie in (0, 1)");
  std::vector<double> b(static_cast<std::size_t>(levels), 1.0);
  for (int l = 1; l < levels; ++l)
    b[static_cast<std::size_t>(l)] = std::pow(beta_min, static_cast<double>(l) / (levels - 1));
  return TemperatureLadder(std::move(b));
}

void TemperatureLadder::set_spacing(std::vector<double> rho) {
  if (rho.size() != rho_.size()) throw Error("spacing vector has wrong length");
  rho_ = std::move(rho);
  // Gap factors stay within [exp(-20), 1 - 1e-12] so every beta is a normal double.
  for (double& r : rho_) r = std::clamp(r, std::log(1e-12), std::log(20.0));
  rebuild();
}

void TemperatureLadder::rebuild() {
  for (std::size_t l = 0; l < rho_.size(); ++l) {
    const double next = betas_[l] * std::exp(-std::exp(rho_[l]));
    // Keep the ladder representable; gaps below double resolution are clamped.
    betas_[l + 1] = std::min(next, std::nextafter(betas_[l], 0.0));
    if (!(betas_[l + 1] > 0.0)) betas_[l + 1] = std::numeric_limits<double>::min();
  }
}

void TemperatureLadder::record_swap(int pair, double alpha, bool accepted) {
  const auto p = static_cast<std::size_t>(pair);
  ++attempts_[p];
  accepted_[p] += accepted ? 1 : 0;
  alpha_sum_[p] += alpha;
}

double TemperatureLadder::acceptance(int pair) const {
  const auto p = static_cast<std::size_t>(pair);
  return attempts_[p] == 0 ? 0.0 : static_cast<double>(accepted_[p]) / static_cast<double>(attempts_[p]);
}

double TemperatureLadder::mean_alpha(int pair) const {
  const auto p = static_cast<std::size_t>(pair);
  return attempts_[p] == 0 ? 0.0 : alpha_sum_[p] / static_cast<double>(attempts_[p]);
}

void TemperatureLadder::reset_statistics() {
  attempts_.assign(rho_.size(), 0);
  accepted_.assign(rho_.size(), 0);
  alpha_sum_.assign(rho_.size(), 0.0);
}

double swap_acceptance(double beta_l, double beta_next, double log_pi_l, double log_pi_next) {
  const double e = (beta_l - beta_next) * (log_pi_next - log_pi_l);
  if (std::isnan(e)) return 0.0;
  return e >= 0.0 ? 1.0 : std::exp(e);
}

SwapSchedule parse_swap_schedule(std::string_view name) {
  if (name == "uniform" || name == "uniform-random-pair") return SwapSchedule::uniform_random_pair;
  if (name == "even") return SwapSchedule::even;
  if (name == "odd") return SwapSchedule::odd;
  if (name == "deo" || name == "deo-alternating") return SwapSchedule::deo;
  throw Error("unknown swap schedule '" + std::string(name) + "'");
}

std::string_view to_string(SwapSchedule s) {
  switch (s) {
    case SwapSchedule::uniform_random_pair: return "uniform";
    case SwapSchedule::even: return "even";
    case SwapSchedule::odd: return "odd";
    case SwapSchedule::deo: return "deo";
  }
  return "deo";
}

std::vector<int> scheduled_pairs(SwapSchedule schedule, int levels, std::size_t sweep,
                                 RngStream& rng) {
  std::vector<int> pairs;
  if (levels < 2) return pairs;
  if (schedule == SwapSchedule::uniform_random_pair) {
    pairs.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(levels - 1))));
    return pairs;
  }
  bool even = schedule == SwapSchedule::even;
  if (schedule == SwapSchedule::deo) even = sweep % 2 == 0;
  // 1-based l even <=> 0-based p odd
  for (int p = even ? 1 : 0; p < levels - 1; p += 2) pairs.push_back(p);
  return pairs;
}

ReplicaEnsemble make_rwm_ensemble(const TargetModel& target, const TemperatureLadder& ladder,
                                  const std::vector<Vector>& inits, std::uint64_t seed,
                                  RwmSettings settings) {
  const int levels = ladder.levels();
  if (inits.size() != 1 && inits.size() != static_cast<std::size_t>(levels))
    throw Error("need one initial state or one per level");
  ReplicaEnsemble e;
  const RngStream root(seed, 0);
  for (int l = 0; l < levels; ++l) {
    e.targets.emplace_back(target, ladder.beta(l));
    e.streams.push_back(root.split(static_cast<std::uint64_t>(l) + 1));
    e.kernels.push_back(std::make_unique<AdaptiveRwmKernel>(target.dimension(), settings));
    e.labels.push_back(l + 1);
  }
  for (int l = 0; l < levels; ++l) {
    const Vector& x0 = inits.size() == 1 ? inits[0] : inits[static_cast<std::size_t>(l)];
    const double lp = target.log_density(x0);
    if (lp == kLogZero) throw Error("initial state outside the target support");
    ChainState s;
    s.position = x0;
    s.log_density = ladder.beta(l) * lp;
    e.states.push_back(std::move(s));
    e.base_log_density.push_back(lp);
  }
  return e;
}

std::vector<bool> propagate(ReplicaEnsemble& e, unsigned threads) {
  const std::size_t levels = e.states.size();
  std::vector<char> accepted(levels, 0);
  auto one = [&](std::size_t l) {
    const StepInfo info = e.kernels[l]->step(e.states[l], e.targets[l], e.streams[l]);
    accepted[l] = info.accepted;
    e.base_log_density[l] = e.states[l].log_density / e.targets[l].inverse_temperature();
  };
  parallel_for(levels, one, threads);
  return {accepted.begin(), accepted.end()};
}

std::vector<SwapOutcome> swap_sweep(ReplicaEnsemble& e, TemperatureLadder& ladder,
                                    SwapSchedule schedule, std::size_t sweep, RngStream& rng) {
  std::vector<SwapOutcome> out;
  for (int p : scheduled_pairs(schedule, ladder.levels(), sweep, rng)) {
    const auto a = static_cast<std::size_t>(p);
    const auto b = a + 1;
    SwapOutcome o;
    o.pair = p;
    o.alpha = swap_acceptance(ladder.beta(p), ladder.beta(p + 1), e.base_log_density[a],
                              e.base_log_density[b]);
    o.accepted = o.alpha >= 1.0 || rng.uniform() < o.alpha;
    if (o.accepted) {
      std::swap(e.states[a].position, e.states[b].position);
      std::swap(e.base_log_density[a], e.base_log_density[b]);
      std::swap(e.labels[a], e.labels[b]);
      e.states[a].log_density = ladder.beta(p) * e.base_log_density[a];
      e.states[b].log_density = ladder.beta(p + 1) * e.base_log_density[b];
    }
    ladder.record_swap(p, o.alpha, o.accepted);
    out.push_back(o);
  }
  return out;
}

void adapt_ladder(TemperatureLadder& ladder, const std::vector<SwapOutcome>& observed,
                  std::size_t t, double decay, double target) {
  if (observed.empty()) return;
  const double eta = std::pow(static_cast<double>(std::max<std::size_t>(t, 1)), -decay);
  std::vector<double> rho = ladder.spacing();
  for (const auto& o : observed) rho[static_cast<std::size_t>(o.pair)] += eta * (o.alpha - target);
  ladder.set_spacing(std::move(rho));
}

void retemper(ReplicaEnsemble& e, const TemperatureLadder& ladder) {
  for (std::size_t l = 0; l < e.states.size(); ++l) {
    const double beta = ladder.beta(static_cast<int>(l));
    e.targets[l].set_inverse_temperature(beta);
    e.states[l].log_density = beta * e.base_log_density[l];
  }
}

PtResult pt_run(const TargetModel& target, TemperatureLadder ladder, std::size_t n_sweeps,
                const std::vector<Vector>& inits, const PtOptions& options, std::uint64_t seed) {
  const int levels = ladder.levels();
  RwmSettings rwm = options.rwm;
  ReplicaEnsemble e = make_rwm_ensemble(target, ladder, inits, seed, rwm);
  if (options.common_covariance) {
    RwmSettings shared = rwm;
    shared.adapt_covariance = false;
    for (int l = 1; l < levels; ++l)
      e.kernels[static_cast<std::size_t>(l)] =
          std::make_unique<AdaptiveRwmKernel>(target.dimension(), shared);
  }
  auto rwm_state = [&](int l) -> AdaptiveRwmState& {
    return static_cast<AdaptiveRwmKernel&>(*e.kernels[static_cast<std::size_t>(l)]).adaptation();
  };
  RngStream swap_rng = RngStream(seed, 0).split(1u << 20);

  PtResult r{Trace(target.dimension(), target.space()), {}, {}, ladder, {}};
  r.cold.reserve(n_sweeps + 1);
  const std::uint16_t tag = r.cold.intern_tag("pt");
  r.cold.push_initial(e.states[0].position);
  r.replicas.push_back(e.labels);
  r.ladder_history.push_back(ladder.betas());
  std::vector<std::size_t> local_acc(static_cast<std::size_t>(levels), 0);

  bool adapting = options.adapt;
  for (std::size_t s = 0; s < n_sweeps; ++s) {
    if (adapting && options.adapt_sweeps > 0 && s >= options.adapt_sweeps) {
      adapting = false;
      for (int l = 0; l < levels; ++l) rwm_state(l).freeze();
      ladder.reset_statistics();
    }
    if (s == 0 && !adapting)
      for (int l = 0; l < levels; ++l) rwm_state(l).freeze();
    bool cold_accepted = false;
    try {
      for (int k = 0; k < options.local_steps; ++k) {
        const auto acc = propagate(e, options.threads);
        for (int l = 0; l < levels; ++l) local_acc[static_cast<std::size_t>(l)] += acc[static_cast<std::size_t>(l)];
        cold_accepted = cold_accepted || acc[0];
      }
    } catch (const NumericalError& err) {
      r.cold.mark_failed("sweep " + std::to_string(s + 1) + ": " + err.what());
      break;
    }
    const auto outcomes = swap_sweep(e, ladder, options.schedule, s, swap_rng);
    if (adapting) {
      if (options.adapt_ladder) {
        adapt_ladder(ladder, outcomes, s + 1, options.decay, options.target_swap);
        retemper(e, ladder);
      }
      if (options.common_covariance && (s + 1) % 10 == 0)
        for (int l = 1; l < levels; ++l) rwm_state(l).set_external_covariance(rwm_state(0).covariance());
    }
    r.cold.push(e.states[0].position, StepMeta{cold_accepted, tag, e.labels[0]});
    r.replicas.push_back(e.labels);
    if (options.ladder_record_every > 0 && (s + 1) % options.ladder_record_every == 0)
      r.ladder_history.push_back(ladder.betas());
  }
  for (int l = 0; l < levels; ++l)
    r.level_acceptance.push_back(
        n_sweeps == 0 ? 0.0
                      : static_cast<double>(local_acc[static_cast<std::size_t>(l)]) /
                            static_cast<double>(n_sweeps * static_cast<std::size_t>(options.local_steps)));
  r.ladder = std::move(ladder);
  return r;
}

void write_replica_csv(const ReplicaIndexTrace& trace, std::ostream& out) {
  out << "sweep";
  const std::size_t levels = trace.empty() ? 0 : trace.front().size();
  for (std::size_t l = 1; l <= levels; ++l) out << ",temp_level_" << l;
  out << '\n';
  for (std::size_t s = 0; s < trace.size(); ++s) {
    out << s;
    for (int label : trace[s]) out << ',' << label;
    out << '\n';
  }
}

ExactKernelMatrix pt_exact_joint_matrix(const std::vector<double>& log_pi, const Matrix& proposal,
                                        double beta_1, double beta_2) {
  const auto n = static_cast<Eigen::Index>(log_pi.size());
  if (n * n > 4096) throw Error("pt_exact_joint_matrix: joint space too large");
  std::vector<double> t1(log_pi.size()), t2(log_pi.size());
  for (std::size_t i = 0; i < log_pi.size(); ++i) {
    t1[i] = beta_1 * log_pi[i];
    t2[i] = beta_2 * log_pi[i];
  }
  const Matrix m1 = build_transition_matrix(t1, proposal).matrix();
  const Matrix m2 = build_transition_matrix(t2, proposal).matrix();
  // joint index x1 * n + x2
  Matrix prop = Matrix::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index d = 0; d < n; ++d) prop(a * n + b, c * n + d) = m1(a, c) * m2(b, d);
  Matrix swap = Matrix::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const double alpha = swap_acceptance(beta_1, beta_2, log_pi[static_cast<std::size_t>(a)],
                                           log_pi[static_cast<std::size_t>(b)]);
      swap(a * n + b, b * n + a) += alpha;
      swap(a * n + b, a * n + b) += 1.0 - alpha;
    }
  std::vector<double> joint(static_cast<std::size_t>(n * n));
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      joint[static_cast<std::size_t>(a * n + b)] = t1[static_cast<std::size_t>(a)] + t2[static_cast<std::size_t>(b)];
  Matrix p = prop * swap;
  return ExactKernelMatrix(std::move(p), normalize_log_weights(joint));
}

}  // namespace mmcmc
