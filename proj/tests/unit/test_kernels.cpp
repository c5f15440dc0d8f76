#include <cmath>

#include "doctest.h"
#include "mmcmc/diagnostics.hpp"
#include "mmcmc/error.hpp"
#include "mmcmc/kernels.hpp"

using namespace mmcmc;

namespace {

class FlatTarget final : public TargetModel {
 public:
  Eigen::Index dimension() const override { return 3; }
  StateSpace space() const override { return StateSpace::continuous; }
  double log_density(const Vector&) const override { return 1.0; }
};

class NormalTarget final : public TargetModel {
 public:
  explicit NormalTarget(double var = 1.0) : var_(var) {}
  Eigen::Index dimension() const override { return 1; }
  StateSpace space() const override { return StateSpace::continuous; }
  double log_density(const Vector& x) const override { return -0.5 * x.squaredNorm() / var_; }

 private:
  double var_;
};

}  // namespace

TEST_CASE("rwm initial scale and flat target") {
  AdaptiveRwmState a(4);
  CHECK(a.scale() == doctest::Approx(2.38 * 2.38 / 4));
  CHECK(a.covariance() == Matrix::Identity(4, 4));
  FlatTarget flat;
  AdaptiveRwmState b(3);
  RngStream rng(1, 0);
  ChainState s = ChainState::at(flat, Vector::Zero(3));
  for (int i = 0; i < 100; ++i) CHECK(rwm_step(s, flat, b, rng));
}

TEST_CASE("rwm proposals are deterministic") {
  AdaptiveRwmState a(2);
  RngStream r1(7, 2), r2(7, 2);
  CHECK(rwm_propose(Vector::Ones(2), a, r1) == rwm_propose(Vector::Ones(2), a, r2));
}

TEST_CASE("rwm optimal 1-d scale acceptance") {
  NormalTarget t;
  AdaptiveRwmState a(1);
  a.set_log_scale(std::log(2.38 * 2.38));
  RngStream rng(2, 0);
  ChainState s = ChainState::at(t, Vector::Zero(1));
  int acc = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += rwm_step(s, t, a, rng);
  const double rate = acc / double(n);
  CHECK(rate > 0.35);
  CHECK(rate < 0.55);
}

TEST_CASE("rwm_adapt update rule") {
  RwmSettings cfg;
  cfg.adapt_covariance = false;
  AdaptiveRwmState a(2, cfg);
  const double l0 = a.log_scale();
  rwm_adapt(a, false, Vector::Zero(2));
  CHECK(a.log_scale() == doctest::Approx(l0 - 0.234));
  const double eta2 = std::pow(2.0, -0.6);
  CHECK(a.step_size() == doctest::Approx(eta2));
  rwm_adapt(a, true, Vector::Zero(2));
  CHECK(a.log_scale() == doctest::Approx(l0 - 0.234 + eta2 * 0.766));
  double prev = a.log_scale();
  for (int i = 0; i < 50; ++i) {
    rwm_adapt(a, false, Vector::Zero(2));
    CHECK(a.log_scale() < prev);
    prev = a.log_scale();
  }
  a.freeze();
  rwm_adapt(a, true, Vector::Zero(2));
  CHECK(a.log_scale() == prev);
}

TEST_CASE("rwm covariance stays symmetric positive-definite") {
  AdaptiveRwmState a(5);
  RngStream rng(3, 0);
  for (int i = 0; i < 10000; ++i) {
    Vector x = rng.normal_vector(5);
    x[4] = x[3];  // degenerate direction
    rwm_adapt(a, rng.bernoulli(0.3), x);
  }
  const Matrix& c = a.covariance();
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(a.scale() > 0.0);
}

TEST_CASE("adaptive rwm on one mixture mode") {
  GaussianMixtureParams p = GaussianMixtureParams::benchmark(8);
  GaussianMixtureTarget t(p);
  AdaptiveRwmKernel k(8);
  RngStream rng(4, 0);
  const Trace tr = run_chain(t, k, p.mean2, 100000, rng);
  k.adaptation().reset_acceptance();
  ChainState s = ChainState::at(t, Vector(tr.state(tr.size() - 1)));
  for (int i = 0; i < 20000; ++i) k.step(s, t, rng);
  CHECK(k.adaptation().acceptance_rate() > 0.15);
  CHECK(k.adaptation().acceptance_rate() < 0.35);
}

TEST_CASE("gibbs sweeps") {
  AutologisticTarget fair(AutologisticParams::make(1, 1, {1}, 0.0, 0.0));
  RngStream rng(5, 0);
  ChainState s = ChainState::at(fair, Vector::Zero(1));
  int ones = 0;
  for (int i = 0; i < 20000; ++i) {
    gibbs_site_step(s, 0, fair, rng);
    ones += s.position[0] == 1.0;
  }
  CHECK(std::abs(ones / 20000.0 - 0.5) < 0.02);

  AutologisticTarget t(AutologisticParams::make(2, 3, {1, 0, 1, 0, 0, 1}, 1.0, 0.7));
  ChainState c = ChainState::at(t, Vector::Zero(6));
  Vector before = c.position;
  gibbs_site_step(c, 3, t, rng);
  for (int i = 0; i < 6; ++i)
    if (i != 3) CHECK(c.position[i] == before[i]);
  for (int i = 0; i < 100; ++i) gibbs_sweep(c, t, rng);
  CHECK(c.log_density == doctest::Approx(t.log_density(c.position)).epsilon(1e-12));
}

TEST_CASE("site flip kernel keeps the density cache") {
  AutologisticTarget t(AutologisticParams::make(3, 3, {1, 0, 1, 0, 1, 0, 1, 0, 1}, 1.0, 0.7));
  SiteFlipKernel k(3);
  RngStream rng(6, 0);
  ChainState s = ChainState::at(t, Vector::Zero(9));
  for (int i = 0; i < 1000; ++i) k.step(s, t, rng);
  CHECK(s.log_density == doctest::Approx(t.log_density(s.position)).epsilon(1e-12));
}

TEST_CASE("independence sampler") {
  TabularTarget t({0.2, 0.5, 0.3});
  const auto q = JumpProposal::tabular({0.2, 0.5, 0.3});
  RngStream rng(7, 0);
  ChainState s = ChainState::at(t, TabularTarget::state(0));
  for (int i = 0; i < 200; ++i) CHECK(independence_jump_step(s, t, q, rng));

  const auto zero = JumpProposal::tabular({0.0, 0.5, 0.5});
  ChainState z = ChainState::at(t, TabularTarget::state(0));
  CHECK_THROWS_AS(independence_jump_step(z, t, zero, rng), NumericalError);

  NormalTarget n;
  JumpComponent c{1.0, Vector::Zero(1), Matrix::Constant(1, 1, 1.2), 0.0};
  IndependenceJumpKernel k(JumpProposal::mixture({c}));
  const Trace tr = run_chain(n, k, Vector::Zero(1), 20000, rng);
  CHECK(tr.acceptance_rate() > 0.8);
}

TEST_CASE("jump proposal densities integrate to one") {
  JumpComponent a{0.3, Vector::Constant(1, -2.0), Matrix::Constant(1, 1, 0.5), 0.0};
  JumpComponent b{0.7, Vector::Constant(1, 1.0), Matrix::Constant(1, 1, 2.0), 7.0};
  const auto q = JumpProposal::mixture({a, b});
  double s = 0.0;
  const double h = 1e-3;
  for (double x = -200; x < 200; x += h) s += std::exp(q.log_density(Vector::Constant(1, x))) * h;
  CHECK(s == doctest::Approx(1.0).epsilon(2e-3));
  RngStream rng(8, 0);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += q.sample(rng)[0];
  CHECK(mean / 100000 == doctest::Approx(0.3 * -2.0 + 0.7 * 1.0).epsilon(0.03));
}

TEST_CASE("frozen kernels are reversible on tabular targets") {
  RngStream rng(9, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.index(10);
    std::vector<double> logw(n);
    for (auto& v : logw) v = 2.0 * rng.normal();
    TabularNeighbourKernel k;
    const auto m = build_transition_matrix(logw, k.proposal_matrix(n));
    CHECK(m.detailed_balance_residual() <= 1e-10);
    CHECK(m.stationarity_residual() <= 1e-10);
  }
  // Irregular adjacency needs the Hastings correction.
  std::vector<std::vector<int>> adj = {{1, 2, 3}, {0}, {0, 3}, {0, 2}};
  TabularNeighbourKernel k(adj);
  const auto m = build_transition_matrix({0.1, -0.4, 0.7, 0.0}, k.proposal_matrix(4));
  CHECK(m.detailed_balance_residual() <= 1e-10);
}
