#include "mmcmc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmcmc/error.hpp"

namespace mmcmc {

namespace {

Matrix cholesky_or_throw(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": Cholesky failed");
  return llt.matrixL();
}

double log_sum_exp(const std::vector<double>& v) {
  double m = kLogZero;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------------------

AdaptiveRwmState::AdaptiveRwmState(Eigen::Index dimension, RwmSettings settings)
    : settings_(settings),
      covariance_(Matrix::Identity(dimension, dimension)),
      initial_covariance_(Matrix::Identity(dimension, dimension)),
      mean_(Vector::Zero(dimension)),
      scatter_(Matrix::Zero(dimension, dimension)),
      log_scale_(std::log(2.38 * 2.38 / static_cast<double>(dimension))),
      chol_(Matrix::Identity(dimension, dimension)) {
  if (dimension <= 0) throw Error("AdaptiveRwmState: dimension must be positive");
  if (settings_.prior_weight <= 0.0) settings_.prior_weight = 10.0 * static_cast<double>(dimension);
  if (settings_.refresh_every < 1) settings_.refresh_every = 1;
}

double AdaptiveRwmState::scale() const { return std::exp(log_scale_); }

void AdaptiveRwmState::set_covariance(const Matrix& sigma) {
  if (sigma.rows() != dimension() || sigma.cols() != dimension())
    throw Error("AdaptiveRwmState: covariance has wrong shape");
  initial_covariance_ = 0.5 * (sigma + sigma.transpose());
  covariance_ = initial_covariance_;
  mean_.setZero();
  scatter_.setZero();
  sample_count_ = 0.0;
  refresh_cholesky();
}

void AdaptiveRwmState::set_external_covariance(const Matrix& sigma) {
  covariance_ = 0.5 * (sigma + sigma.transpose());
  refresh_cholesky();
}

double AdaptiveRwmState::step_size() const {
  return std::pow(static_cast<double>(updates_ + 1), -settings_.decay);
}

double AdaptiveRwmState::acceptance_rate() const {
  return attempts_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(attempts_);
}

void AdaptiveRwmState::record(bool accepted) {
  ++attempts_;
  if (accepted) ++accepted_;
  recent_ += 1e-3 * ((accepted ? 1.0 : 0.0) - recent_);
}

void AdaptiveRwmState::reset_acceptance() {
  accepted_ = 0;
  attempts_ = 0;
  recent_ = settings_.target_acceptance;
}

void AdaptiveRwmState::update_scale(bool accepted) {
  const double eta = step_size();
  ++updates_;
  if (settings_.adapt_scale)
    log_scale_ += eta * ((accepted ? 1.0 : 0.0) - settings_.target_acceptance);
}

void AdaptiveRwmState::update_covariance(const Vector& x) {
  if (!settings_.adapt_covariance) return;
  // Welford update of mean and scatter, then shrink towards the initial matrix.
  sample_count_ += 1.0;
  const Vector delta = x - mean_;
  mean_ += delta / sample_count_;
  scatter_.noalias() += delta * (x - mean_).transpose();
  const double n0 = settings_.prior_weight;
  covariance_ = (n0 * initial_covariance_ + scatter_) / (n0 + sample_count_);
  covariance_.diagonal().array() += settings_.jitter;
  if (++since_refresh_ >= static_cast<std::size_t>(settings_.refresh_every)) refresh_cholesky();
}

void AdaptiveRwmState::refresh_cholesky() {
  since_refresh_ = 0;
  Matrix c = 0.5 * (covariance_ + covariance_.transpose());
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    c.diagonal().array() += settings_.jitter;
    llt.compute(c);
    if (llt.info() != Eigen::Success)
      throw NumericalError("rwm: proposal covariance is not positive-definite");
  }
  chol_ = llt.matrixL();
}

Vector rwm_propose(const Vector& x, const AdaptiveRwmState& a, RngStream& rng) {
  const Vector z = rng.normal_vector(x.size());
  return x + std::sqrt(a.scale()) * (a.cholesky_factor() * z);
}

bool rwm_step(ChainState& state, const TargetModel& target, const AdaptiveRwmState& a,
              RngStream& rng) {
  if (target.space() != StateSpace::continuous)
    throw Error("rwm_step: target must be continuous");
  Proposal p{rwm_propose(state.position, a, rng), 0.0};
  return mh_accept(state, std::move(p), target, rng);
}

void rwm_adapt(AdaptiveRwmState& a, bool accepted, const Vector& new_state) {
  if (a.frozen()) return;
  a.update_scale(accepted);
  a.update_covariance(new_state);
}

StepInfo AdaptiveRwmKernel::step(ChainState& state, const TargetModel& target, RngStream& rng) {
  const bool acc = rwm_step(state, target, state_, rng);
  state_.record(acc);
  rwm_adapt(state_, acc, state.position);
  return {acc, std::nullopt};
}

// ---------------------------------------------------------------------------

void gibbs_site_step(ChainState& state, int site, const AutologisticTarget& target,
                     RngStream& rng) {
  if (site < 0 || site >= target.params().sites()) throw Error("gibbs_site_step: bad site");
  const double p1 = target.site_conditional(state.position, site);
  const double value = rng.uniform() < p1 ? 1.0 : 0.0;
  if (value != state.position[site]) {
    state.log_density += target.flip_delta(state.position, site);
    state.position[site] = value;
  }
}

void gibbs_sweep(ChainState& state, const AutologisticTarget& target, RngStream& rng) {
  for (int i = 0; i < target.params().sites(); ++i) gibbs_site_step(state, i, target, rng);
}

StepInfo GibbsSweepKernel::step(ChainState& state, const TargetModel& target, RngStream& rng) {
  const auto* lattice = dynamic_cast<const AutologisticTarget*>(&target);
  if (lattice == nullptr) throw Error("gibbs: target must be autologistic");
  gibbs_sweep(state, *lattice, rng);
  return {true, std::nullopt};
}

StepInfo SiteFlipKernel::step(ChainState& state, const TargetModel& target, RngStream& rng) {
  if (target.space() != StateSpace::binary_lattice)
    throw Error("flip: target must be a binary lattice");
  bool any = false;
  const auto d = static_cast<std::size_t>(target.dimension());
  for (int k = 0; k < flips_; ++k) {
    const auto site = static_cast<Eigen::Index>(rng.index(d));
    const double delta = target.flip_delta(state.position, site);
    if (std::isnan(delta)) throw NumericalError("flip: NaN log-density difference");
    if (delta >= 0.0 || rng.uniform() < std::exp(delta)) {
      state.position[site] = 1.0 - state.position[site];
      state.log_density += delta;
      any = true;
    }
  }
  return {any, std::nullopt};
}

// ---------------------------------------------------------------------------

std::vector<int> TabularNeighbourKernel::neighbours(std::size_t x) const {
  if (!adjacency_.empty()) return adjacency_.at(x);
  const int i = static_cast<int>(x);
  return {i - 1, i + 1};
}

StepInfo TabularNeighbourKernel::step(ChainState& state, const TargetModel& target,
                                      RngStream& rng) {
  if (target.space() != StateSpace::tabular) throw Error("local: target must be tabular");
  const auto x = static_cast<std::size_t>(state.position[0]);
  const auto nx = neighbours(x);
  if (nx.empty()) return {false, std::nullopt};
  const int y = nx[rng.index(nx.size())];
  const auto n = static_cast<std::size_t>(target.exact_table()->size());
  if (y < 0 || static_cast<std::size_t>(y) >= n) return {false, std::nullopt};
  const auto ny = neighbours(static_cast<std::size_t>(y));
  const double log_q_ratio =
      std::log(static_cast<double>(nx.size())) - std::log(static_cast<double>(ny.size()));
  Proposal p{TabularTarget::state(static_cast<std::size_t>(y)), log_q_ratio};
  return {mh_accept(state, std::move(p), target, rng), std::nullopt};
}

std::vector<double> TabularNeighbourKernel::proposal_row(std::size_t x, std::size_t n) const {
  std::vector<double> row(n, 0.0);
  const auto nx = neighbours(x);
  if (nx.empty()) {
    row[x] = 1.0;
    return row;
  }
  const double p = 1.0 / static_cast<double>(nx.size());
  for (int y : nx) {
    if (y < 0 || static_cast<std::size_t>(y) >= n)
      row[x] += p;
    else
      row[static_cast<std::size_t>(y)] += p;
  }
  return row;
}

Matrix TabularNeighbourKernel::proposal_matrix(std::size_t n) const {
  Matrix q(n, n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto row = proposal_row(x, n);
    for (std::size_t y = 0; y < n; ++y) q(x, y) = row[y];
  }
  return q;
}

// ---------------------------------------------------------------------------

double log_elliptical_density(const Vector& x, const Vector& center, const Matrix& chol,
                              double dof) {
  const auto d = static_cast<double>(x.size());
  const Vector u = chol.triangularView<Eigen::Lower>().solve(x - center);
  const double q = u.squaredNorm();
  const double log_det_half = chol.diagonal().array().log().sum();
  if (dof <= 0.0) return -0.5 * d * std::log(2.0 * std::numbers::pi) - log_det_half - 0.5 * q;
  return std::lgamma(0.5 * (dof + d)) - std::lgamma(0.5 * dof) -
         0.5 * d * std::log(dof * std::numbers::pi) - log_det_half -
         0.5 * (dof + d) * std::log1p(q / dof);
}

JumpProposal JumpProposal::tabular(std::vector<double> probabilities) {
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw Error("JumpProposal: negative probability");
    total += p;
  }
  if (probabilities.empty() || std::abs(total - 1.0) > 1e-10)
    throw Error("JumpProposal: probabilities must sum to 1");
  JumpProposal q;
  q.table_ = std::move(probabilities);
  return q;
}

JumpProposal JumpProposal::mixture(std::vector<JumpComponent> components) {
  if (components.empty()) throw Error("JumpProposal: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw Error("JumpProposal: weights must be positive");
    total += c.weight;
  }
  JumpProposal q;
  for (auto& c : components) {
    Prepared p;
    p.chol = cholesky_or_throw(c.covariance, "JumpProposal");
    p.component = std::move(c);
    p.component.weight /= total;
    p.log_norm = std::log(p.component.weight);
    q.components_.push_back(std::move(p));
  }
  return q;
}

Vector JumpProposal::sample(RngStream& rng) const {
  if (is_tabular()) {
    double u = rng.uniform();
    std::size_t i = 0;
    for (; i + 1 < table_.size(); ++i) {
      if (u < table_[i]) break;
      u -= table_[i];
    }
    return TabularTarget::state(i);
  }
  double u = rng.uniform();
  std::size_t k = 0;
  for (; k + 1 < components_.size(); ++k) {
    if (u < components_[k].component.weight) break;
    u -= components_[k].component.weight;
  }
  const auto& c = components_[k];
  Vector z = rng.normal_vector(c.component.center.size());
  if (c.component.dof > 0.0) z *= std::sqrt(c.component.dof / rng.chi_squared(c.component.dof));
  return c.component.center + c.chol * z;
}

double JumpProposal::log_density(const Vector& x) const {
  if (is_tabular()) {
    const double v = x[0];
    if (v < 0.0 || v >= static_cast<double>(table_.size())) return kLogZero;
    return std::log(table_[static_cast<std::size_t>(v)]);
  }
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (const auto& c : components_)
    terms.push_back(c.log_norm +
                    log_elliptical_density(x, c.component.center, c.chol, c.component.dof));
  return log_sum_exp(terms);
}

bool independence_jump_step(ChainState& state, const TargetModel& target, const JumpProposal& q,
                            RngStream& rng) {
  const double log_q_x = q.log_density(state.position);
  if (!std::isfinite(log_q_x))
    throw NumericalError("independence_jump_step: proposal density is zero at the current state");
  Vector y = q.sample(rng);
  const double log_q_y = q.log_density(y);
  return mh_accept(state, Proposal{std::move(y), log_q_x - log_q_y}, target, rng);
}

StepInfo IndependenceJumpKernel::step(ChainState& state, const TargetModel& target,
                                      RngStream& rng) {
  return {independence_jump_step(state, target, q_, rng), std::nullopt};
}

}  // namespace mmcmc
