#include "mmcmc/wang_landau.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <numeric>
#include <ostream>

#include "mmcmc/error.hpp"

namespace mmcmc {

BiasPotential::BiasPotential(double z_min, double z_max, int bins, double eta0) : eta_(eta0) {
  if (bins < 2) throw Error("BiasPotential: need at least two bins");
  if (!(z_max > z_min)) throw Error("BiasPotential: z_max must exceed z_min");
  edges_.resize(static_cast<std::size_t>(bins) + 1);
  for (int j = 0; j <= bins; ++j)
    edges_[static_cast<std::size_t>(j)] = z_min + (z_max - z_min) * j / bins;
  edges_.back() = z_max;
  theta_.assign(static_cast<std::size_t>(bins), 0.0);
  counts_.assign(static_cast<std::size_t>(bins), 0.0);
  samples_.resize(static_cast<std::size_t>(bins));
  visited_.assign(static_cast<std::size_t>(bins), 0);
}

BiasPotential::BiasPotential(std::vector<double> edges, double eta0)
    : edges_(std::move(edges)), eta_(eta0) {
  if (edges_.size() < 3) throw Error("BiasPotential: need at least two bins");
  for (std::size_t j = 1; j < edges_.size(); ++j)
    if (!(edges_[j] > edges_[j - 1])) throw Error("BiasPotential: edges must be strictly increasing");
  theta_.assign(edges_.size() - 1, 0.0);
  counts_.assign(edges_.size() - 1, 0.0);
  samples_.resize(edges_.size() - 1);
  visited_.assign(edges_.size() - 1, 0);
}

void BiasPotential::set_theta(std::vector<double> theta) {
  if (theta.size() != theta_.size()) throw Error("BiasPotential: theta has wrong length");
  theta_ = std::move(theta);
}

double BiasPotential::total_count() const {
  return std::accumulate(counts_.begin(), counts_.end(), 0.0);
}

std::vector<double> BiasPotential::occupancy() const {
  const double total = total_count();
  std::vector<double> nu(counts_.size(), 1.0 / static_cast<double>(counts_.size()));
  if (total > 0.0)
    for (std::size_t j = 0; j < nu.size(); ++j) nu[j] = counts_[j] / total;
  return nu;
}

void BiasPotential::record(int bin, double z, bool out_of_range) {
  counts_[static_cast<std::size_t>(bin)] += 1.0;
  samples_[static_cast<std::size_t>(bin)].push_back(z);
  visited_[static_cast<std::size_t>(bin)] = 1;
  if (out_of_range) ++out_of_range_;
}

void BiasPotential::next_epoch() {
  ++epoch_;
  eta_ *= 0.5;
  std::fill(counts_.begin(), counts_.end(), 0.0);
  for (auto& s : samples_) s.clear();
}

void BiasPotential::split(int bin, double at, double new_lo, double new_hi) {
  const auto j = static_cast<std::size_t>(bin);
  const double lo = std::min(edges_[j], new_lo);
  const double hi = std::max(edges_[j + 1], new_hi);
  if (!(at > lo && at < hi)) throw Error("BiasPotential: split point outside the bin");
  if (j > 0 && lo != edges_[j]) throw Error("BiasPotential: only the first bin can extend downwards");
  if (j + 2 < edges_.size() && hi != edges_[j + 1])
    throw Error("BiasPotential: only the last bin can extend upwards");
  edges_[j] = lo;
  edges_[j + 1] = hi;
  edges_.insert(edges_.begin() + static_cast<std::ptrdiff_t>(j) + 1, at);
  theta_.insert(theta_.begin() + static_cast<std::ptrdiff_t>(j) + 1, theta_[j]);
  std::vector<double> left, right;
  for (double z : samples_[j]) (z < at ? left : right).push_back(z);
  counts_[j] = static_cast<double>(left.size());
  counts_.insert(counts_.begin() + static_cast<std::ptrdiff_t>(j) + 1, static_cast<double>(right.size()));
  visited_[j] = left.empty() ? 0 : 1;
  visited_.insert(visited_.begin() + static_cast<std::ptrdiff_t>(j) + 1, right.empty() ? 0 : 1);
  samples_[j] = std::move(left);
  samples_.insert(samples_.begin() + static_cast<std::ptrdiff_t>(j) + 1, std::move(right));
}

void BiasPotential::recenter() {
  const double mean = std::accumulate(theta_.begin(), theta_.end(), 0.0) / static_cast<double>(theta_.size());
  for (double& t : theta_) t -= mean;
}

double reaction_coordinate(const Vector& x, const TargetModel& target) {
  return -target.log_density(x);
}

ReactionCoordinate negative_log_density() {
  return [](const Vector&, double log_pi) { return -log_pi; };
}

BinLookup bin_index(double z, const BiasPotential& bias) {
  const auto& e = bias.edges();
  if (z < e.front()) return {0, true};
  if (z > e.back()) return {bias.bins() - 1, true};
  const auto it = std::upper_bound(e.begin(), e.end(), z);
  const int j = static_cast<int>(it - e.begin()) - 1;
  return {std::min(j, bias.bins() - 1), false};
}

WlChain make_wl_chain(const TargetModel& target, const Vector& x, const BiasPotential& bias,
                      const ReactionCoordinate& xi) {
  WlChain c;
  c.state = ChainState::at(target, x);
  if (c.state.log_density == kLogZero) throw Error("Wang-Landau chain started outside the support");
  c.xi = xi(c.state.position, c.state.log_density);
  c.bin = bin_index(c.xi, bias);
  return c;
}

WlProposer rwm_proposer(const TargetModel& target, const AdaptiveRwmState& a) {
  return [&target, &a](const ChainState& x, RngStream& rng) {
    WlProposal p;
    p.y = rwm_propose(x.position, a, rng);
    p.log_pi_y = target.log_density(p.y);
    return p;
  };
}

WlProposer flip_proposer(const TargetModel& target) {
  return [&target](const ChainState& x, RngStream& rng) {
    const auto site = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(target.dimension())));
    WlProposal p;
    p.log_pi_y = x.log_density + target.flip_delta(x.position, site);
    p.y = x.position;
    p.y[site] = 1.0 - p.y[site];
    return p;
  };
}

WlProposer neighbour_proposer(const TargetModel& target, const TabularNeighbourKernel& k) {
  return [&target, &k](const ChainState& x, RngStream& rng) {
    const auto n = target.exact_table()->size();
    const auto i = static_cast<std::size_t>(std::llround(x.position[0]));
    const auto nx = k.neighbours(i);
    WlProposal p;
    p.y = x.position;
    if (nx.empty()) {
      p.log_pi_y = x.log_density;
      return p;
    }
    const int j = nx[rng.index(nx.size())];
    p.y = Vector::Constant(1, static_cast<double>(j));
    if (j < 0 || static_cast<std::size_t>(j) >= n) return p;  // log_pi_y stays -inf
    p.log_pi_y = target.log_density(p.y);
    p.log_q_ratio = std::log(static_cast<double>(nx.size())) -
                    std::log(static_cast<double>(k.neighbours(static_cast<std::size_t>(j)).size()));
    return p;
  };
}

double wl_acceptance_probability(double log_pi_x, double log_pi_y, double xi_x, double xi_y,
                                 const BiasPotential& bias, double log_q_ratio) {
  if (log_pi_y == kLogZero) return 0.0;
  const double tx = bias.theta()[static_cast<std::size_t>(bin_index(xi_x, bias).bin)];
  const double ty = bias.theta()[static_cast<std::size_t>(bin_index(xi_y, bias).bin)];
  const double log_r = (log_pi_y - ty) - (log_pi_x - tx) + log_q_ratio;
  if (std::isnan(log_r)) throw NumericalError("wl_step: NaN acceptance ratio");
  return log_r >= 0.0 ? 1.0 : std::exp(log_r);
}

bool wl_step(WlChain& chain, const BiasPotential& bias, const WlProposer& propose, RngStream& rng,
             const ReactionCoordinate& xi) {
  WlProposal p = propose(chain.state, rng);
  if (!std::isfinite(p.log_q_ratio)) throw NumericalError("wl_step: non-finite proposal ratio");
  if (std::isnan(p.log_pi_y)) throw NumericalError("wl_step: NaN log-density at proposal");
  ++chain.state.iteration;
  if (p.log_pi_y == kLogZero) return false;
  const double xi_y = xi(p.y, p.log_pi_y);
  const double a = wl_acceptance_probability(chain.state.log_density, p.log_pi_y, chain.xi, xi_y,
                                             bias, p.log_q_ratio);
  if (a >= 1.0 || rng.uniform() < a) {
    chain.state.position = std::move(p.y);
    chain.state.log_density = p.log_pi_y;
    chain.xi = xi_y;
    chain.bin = bin_index(xi_y, bias);
    return true;
  }
  return false;
}

void update_bias(BiasPotential& bias, const std::vector<int>& visited,
                 const std::vector<double>& xi_values, BiasUpdate rule) {
  if (visited.empty()) return;
  const int J = bias.bins();
  std::vector<double> nu(static_cast<std::size_t>(J), 0.0);
  for (int b : visited) nu[static_cast<std::size_t>(b)] += 1.0 / static_cast<double>(visited.size());
  for (int j = 0; j < J; ++j) {
    if (rule == BiasUpdate::pawl)
      bias.add_to_theta(j, bias.eta() * (nu[static_cast<std::size_t>(j)] - 1.0 / J));
    else if (nu[static_cast<std::size_t>(j)] > 0.0)
      bias.add_to_theta(j, bias.eta() * nu[static_cast<std::size_t>(j)] * static_cast<double>(visited.size()));
  }
  bias.recenter();
  for (std::size_t i = 0; i < visited.size(); ++i) {
    const double z = i < xi_values.size() ? xi_values[i] : 0.5 * (bias.edges()[static_cast<std::size_t>(visited[i])] +
                                                                 bias.edges()[static_cast<std::size_t>(visited[i]) + 1]);
    bias.record(visited[i], z, bin_index(z, bias).out_of_range);
  }
}

bool flat_histogram(BiasPotential& bias, double c, bool visited_only) {
  const auto& seen = bias.visited();
  const double J = visited_only ? static_cast<double>(std::count(seen.begin(), seen.end(), 1)) : bias.bins();
  if (J < 2 || bias.total_count() < J) return false;
  const auto nu = bias.occupancy();
  double worst = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j)
    if (!visited_only || seen[j]) worst = std::max(worst, std::abs(nu[j] - 1.0 / J));
  if (worst < c / J) {
    bias.next_epoch();
    return true;
  }
  return false;
}

int maybe_split_bin(BiasPotential& bias, std::size_t min_samples, double threshold, int max_bins,
                    bool extend_range) {
  int splits = 0;
  for (int j = 0; j < bias.bins() && bias.bins() < max_bins; ++j) {
    const auto& s = bias.samples()[static_cast<std::size_t>(j)];
    if (s.size() < min_samples) continue;
    double lo = bias.edges()[static_cast<std::size_t>(j)];
    double hi = bias.edges()[static_cast<std::size_t>(j) + 1];
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    if (*mn == *mx) continue;  // a single energy level cannot be split
    if (extend_range && j == 0) lo = std::min(lo, *mn);
    if (extend_range && j == bias.bins() - 1) hi = std::max(hi, *mx);
    const double mid = 0.5 * (lo + hi);
    const auto left = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double z) { return z < mid; }));
    const double frac = left / static_cast<double>(s.size());
    if (frac <= threshold && 1.0 - frac <= threshold) continue;
    std::vector<double> sorted = s;
    const auto m = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), m, sorted.end());
    const double median = *m;
    if (!(median > lo && median < hi)) continue;  // point mass at an edge
    bias.split(j, median, lo, hi);
    ++splits;
    ++j;
  }
  return splits;
}

std::vector<double> importance_reweight(const std::vector<double>& xi_values,
                                        const BiasPotential& bias) {
  std::vector<double> w(xi_values.size());
  if (w.empty()) return w;
  double m = kLogZero;
  for (std::size_t n = 0; n < w.size(); ++n) {
    w[n] = bias.theta()[static_cast<std::size_t>(bin_index(xi_values[n], bias).bin)];
    m = std::max(m, w[n]);
  }
  double total = 0.0;
  for (double& v : w) total += v = std::exp(v - m);
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> wl_biased_log_target(const std::vector<double>& log_pi,
                                         const BiasPotential& bias) {
  std::vector<double> out(log_pi.size());
  for (std::size_t i = 0; i < log_pi.size(); ++i)
    out[i] = log_pi[i] - bias.theta()[static_cast<std::size_t>(bin_index(-log_pi[i], bias).bin)];
  return out;
}

ExactKernelMatrix wl_exact_matrix(const std::vector<double>& log_pi, const Matrix& proposal,
                                  const BiasPotential& bias) {
  const auto n = static_cast<Eigen::Index>(log_pi.size());
  if (proposal.rows() != n || proposal.cols() != n) throw Error("wl_exact_matrix: shape mismatch");
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    double off = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (y == x || proposal(x, y) <= 0.0) continue;
      const double lq = proposal(y, x) > 0.0 ? std::log(proposal(y, x) / proposal(x, y)) : kLogZero;
      const double a = proposal(y, x) > 0.0
                           ? wl_acceptance_probability(log_pi[x], log_pi[y], -log_pi[x], -log_pi[y], bias, lq)
                           : 0.0;
      p(x, y) = proposal(x, y) * a;
      off += p(x, y);
    }
    p(x, x) = 1.0 - off;
  }
  return ExactKernelMatrix(std::move(p), normalize_log_weights(wl_biased_log_target(log_pi, bias)));
}

namespace {

struct LocalMove {
  std::unique_ptr<AdaptiveRwmState> rwm;
  std::unique_ptr<TabularNeighbourKernel> neighbours;
  WlProposer propose;
};

LocalMove make_local_move(const TargetModel& target, const PawlConfig& cfg) {
  LocalMove m;
  switch (target.space()) {
    case StateSpace::continuous:
      m.rwm = std::make_unique<AdaptiveRwmState>(target.dimension(), cfg.rwm);
      m.propose = rwm_proposer(target, *m.rwm);
      break;
    case StateSpace::binary_lattice:
      m.propose = flip_proposer(target);
      break;
    case StateSpace::tabular: {
      const auto* tab = dynamic_cast<const TabularTarget*>(&target);
      m.neighbours = std::make_unique<TabularNeighbourKernel>(tab ? tab->adjacency() : std::vector<std::vector<int>>{});
      m.propose = neighbour_proposer(target, *m.neighbours);
      break;
    }
  }
  return m;
}

void push_history(PawlResult& r, const BiasPotential& bias, int epoch, double eta,
                  const std::vector<double>& nu) {
  for (int j = 0; j < bias.bins(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    r.bias_history.push_back({epoch, eta, bias.edges()[k], bias.edges()[k + 1], bias.theta()[k], nu[k]});
  }
  r.occupancy_history.push_back(nu);
}

}  // namespace

PawlResult pawl_run(const TargetModel& target, const Vector& init, const PawlConfig& cfg,
                    std::uint64_t seed, const ReactionCoordinate& xi) {
  if (cfg.chains < 1) throw Error("pawl: need at least one chain");
  if (cfg.pilot_iterations < 2) throw Error("pawl: pilot needs at least two iterations");
  LocalMove move = make_local_move(target, cfg);
  const int steps = target.space() == StateSpace::binary_lattice ? std::max(1, cfg.flips_per_step) : 1;
  const RngStream root(seed, 0);

  // Pilot: plain local chain on pi. A flat bias makes wl_step the unbiased kernel.
  PawlResult r{Trace(target.dimension(), target.space()), {}, {}, {}, {}, BiasPotential(0.0, 1.0, 2, cfg.eta0), {}, {}, 0, 0.0};
  const BiasPotential flat(0.0, 1.0, 2);
  RngStream pilot_rng = root.split(0);
  WlChain pilot = make_wl_chain(target, init, flat, xi);
  r.pilot_xi.reserve(cfg.pilot_iterations + 1);
  r.pilot_xi.push_back(pilot.xi);
  for (std::size_t n = 0; n < cfg.pilot_iterations; ++n) {
    for (int k = 0; k < steps; ++k) {
      const bool acc = wl_step(pilot, flat, move.propose, pilot_rng, xi);
      if (move.rwm) {
        move.rwm->record(acc);
        rwm_adapt(*move.rwm, acc, pilot.state.position);
      }
    }
    r.pilot_xi.push_back(pilot.xi);
  }
  if (cfg.pilot_burn_in >= cfg.pilot_iterations) throw Error("pawl: pilot burn-in exceeds the pilot length");
  const auto [lo, hi] = std::minmax_element(r.pilot_xi.begin() + static_cast<std::ptrdiff_t>(cfg.pilot_burn_in) + 1,
                                            r.pilot_xi.end());
  if (!(*hi - *lo > 1e-12)) throw Error("pawl: pilot chain visited a single energy level");
  r.bias = BiasPotential(*lo, *hi, cfg.initial_bins, cfg.eta0);
  BiasPotential& bias = r.bias;

  const auto M = static_cast<std::size_t>(cfg.chains);
  std::vector<WlChain> chains;
  std::vector<RngStream> streams;
  for (std::size_t c = 0; c < M; ++c) {
    chains.push_back(make_wl_chain(target, pilot.state.position, bias, xi));
    streams.push_back(root.split(c + 1));
  }
  if (cfg.thin > 0) r.samples.reserve((cfg.iterations / cfg.thin + 1) * M);
  r.xi_all.reserve(cfg.iterations * M);

  const std::uint16_t tag = r.samples.intern_tag("pawl");
  std::vector<char> accepted(M);
  std::vector<int> visited(M);
  std::vector<double> xis(M);
  std::size_t n_acc = 0;
  bool first_sample = true;
  std::size_t epoch_length = 0;
  for (std::size_t n = 0; n < cfg.iterations; ++n) {
    parallel_for(M, [&](std::size_t c) {
      bool any = false;
      for (int k = 0; k < steps; ++k) any = wl_step(chains[c], bias, move.propose, streams[c], xi) || any;
      accepted[c] = any;
    }, cfg.threads);
    for (std::size_t c = 0; c < M; ++c) {
      chains[c].bin = bin_index(chains[c].xi, bias);
      visited[c] = chains[c].bin.bin;
      xis[c] = chains[c].xi;
      n_acc += accepted[c] ? 1 : 0;
      r.xi_all.push_back(chains[c].xi);
      if (move.rwm) {
        move.rwm->record(accepted[c]);
        rwm_adapt(*move.rwm, accepted[c], chains[c].state.position);
      }
    }
    update_bias(bias, visited, xis, cfg.rule);
    if (++epoch_length >= cfg.min_epoch_iterations) {
      const double eta = bias.eta();
      const int epoch = bias.epoch();
      const auto nu = bias.occupancy();
      if (flat_histogram(bias, cfg.flat_c, true)) {
        epoch_length = 0;
        ++r.epoch_transitions;
        push_history(r, bias, epoch, eta, nu);
      }
    }
    if (cfg.split_bins && cfg.split_every > 0 && (n + 1) % cfg.split_every == 0)
      maybe_split_bin(bias, 100, 0.9, cfg.max_bins, cfg.extend_range);
    if (n >= cfg.burn_in && cfg.thin > 0 && (n - cfg.burn_in) % cfg.thin == 0) {
      for (std::size_t c = 0; c < M; ++c) {
        if (first_sample) {
          r.samples.push_initial(chains[c].state.position);
          first_sample = false;
        } else {
          r.samples.push(chains[c].state.position, StepMeta{accepted[c] != 0, tag, visited[c]});
        }
        r.sample_xi.push_back(chains[c].xi);
      }
    }
  }
  push_history(r, bias, bias.epoch(), bias.eta(), bias.occupancy());
  r.weights = importance_reweight(r.sample_xi, bias);
  r.acceptance = cfg.iterations == 0 ? 0.0 : static_cast<double>(n_acc) / static_cast<double>(cfg.iterations * M);
  return r;
}

Vector weighted_mean(const PawlResult& r) {
  if (r.samples.empty()) throw Error("weighted_mean: no stored samples");
  Vector m = Vector::Zero(r.samples.dimension());
  for (std::size_t n = 0; n < r.samples.size(); ++n) m += r.weights[n] * r.samples.state(n);
  return m;
}

void write_bias_csv(const std::vector<BiasHistoryRow>& rows, std::ostream& out) {
  out << "epoch,eta,bin_lo,bin_hi,theta,occupancy\n";
  const auto old = out.precision(17);
  for (const auto& r : rows)
    out << r.epoch << ',' << r.eta << ',' << r.bin_lo << ',' << r.bin_hi << ',' << r.theta << ','
        << r.occupancy << '\n';
  out.precision(old);
}

}  // namespace mmcmc
