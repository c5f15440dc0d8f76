#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "mmcmc/error.hpp"
#include "mmcmc/targets.hpp"
#include "mmcmc/wang_landau.hpp"

using namespace mmcmc;

namespace {

// Two bumps at 3 and 12 separated by a valley ~1e-3 deep.
std::vector<double> bimodal16() {
  std::vector<double> w(16);
  for (int i = 0; i < 16; ++i)
    w[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - 3) * (i - 3) / 2.0) +
                                     0.6 * std::exp(-0.5 * (i - 12) * (i - 12) / 1.5) + 1e-4;
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
  return w;
}

std::vector<double> logs(const std::vector<double>& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i]);
  return out;
}

}  // namespace

TEST_CASE("bin index clamping and half-open bins") {
  BiasPotential b(0.0, 10.0, 10);
  CHECK(bin_index(0.0, b).bin == 0);
  CHECK_FALSE(bin_index(0.0, b).out_of_range);
  CHECK(bin_index(3.5, b).bin == 3);
  CHECK(bin_index(4.0, b).bin == 4);
  CHECK(bin_index(10.0, b).bin == 9);
  CHECK_FALSE(bin_index(10.0, b).out_of_range);
  CHECK(bin_index(12.0, b).bin == 9);
  CHECK(bin_index(12.0, b).out_of_range);
  CHECK(bin_index(-1.0, b).bin == 0);
  CHECK(bin_index(-1.0, b).out_of_range);
}

TEST_CASE("bias potential validation") {
  CHECK_THROWS_AS(BiasPotential(0.0, 1.0, 1), Error);
  CHECK_THROWS_AS(BiasPotential(1.0, 1.0, 4), Error);
  CHECK_THROWS_AS(BiasPotential(std::vector<double>{0.0, 1.0, 1.0}), Error);
  BiasPotential b(std::vector<double>{0.0, 1.0, 3.0});
  CHECK(b.bins() == 2);
  CHECK_THROWS_AS(b.set_theta({1.0}), Error);
}

TEST_CASE("reaction coordinate") {
  std::vector<std::uint8_t> y{1, 0, 1, 1, 0, 0, 1, 0, 1};
  const auto p = AutologisticParams::make(3, 3, y, 1.0, 0.7);
  AutologisticTarget t(p);
  RngStream rng(3, 0);
  for (int k = 0; k < 20; ++k) {
    Vector x(9);
    for (int i = 0; i < 9; ++i) x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const auto s = autologistic_suff_stats(x, p);
    CHECK(reaction_coordinate(x, t) == doctest::Approx(-1.0 * s.agree_with_observed - 0.7 * s.agree_neighbours));
  }
  GaussianMixtureTarget m(GaussianMixtureParams::benchmark(2));
  CHECK(reaction_coordinate(Vector::Ones(2), m) < reaction_coordinate(Vector::Zero(2), m));
  CHECK(negative_log_density()(Vector::Zero(1), -2.5) == 2.5);
}

TEST_CASE("wl acceptance with uniform or cancelling bias") {
  BiasPotential b(0.0, 10.0, 5);
  b.set_theta({0.3, 0.3, 0.3, 0.3, 0.3});
  RngStream rng(4, 0);
  for (int k = 0; k < 50; ++k) {
    const double lx = -10.0 * rng.uniform(), ly = -10.0 * rng.uniform();
    CHECK(wl_acceptance_probability(lx, ly, -lx, -ly, b) ==
          doctest::Approx(mh_acceptance_probability(lx, ly, 0.0)));
  }
  b.set_theta({0.0, -1.0, 0.5, 2.0, 4.0});
  // same bin: plain MH
  CHECK(wl_acceptance_probability(-4.1, -4.9, 4.1, 4.9, b) == doctest::Approx(std::exp(-0.8)));
  // theta(J(y)) - theta(J(x)) = log pi(y) - log pi(x)
  b.set_theta({0.0, 0.0, -1.5, 0.0, 0.0});
  CHECK(wl_acceptance_probability(-1.0, -5.0, 1.0, 5.0, b) < 1.0);
  b.set_theta({0.0, 0.0, -4.0, 0.0, 0.0});
  CHECK(wl_acceptance_probability(-1.0, -5.0, 1.0, 5.0, b) == 1.0);
  CHECK(wl_acceptance_probability(-1.0, kLogZero, 1.0, 0.0, b) == 0.0);
}

TEST_CASE("bias update arithmetic") {
  BiasPotential b(0.0, 1.0, 2, 0.1);
  update_bias(b, {0}, {0.25});
  CHECK(b.theta()[0] == doctest::Approx(0.05));
  CHECK(b.theta()[1] == doctest::Approx(-0.05));
  CHECK(b.counts()[0] == 1.0);

  BiasPotential u(0.0, 4.0, 4, 0.5);
  update_bias(u, {0, 1, 2, 3}, {0.5, 1.5, 2.5, 3.5});
  for (double t : u.theta()) CHECK(t == doctest::Approx(0.0));

  BiasPotential s(0.0, 3.0, 3, 0.2);
  for (int k = 0; k < 5; ++k) update_bias(s, {1, 1}, {1.5, 1.5});
  CHECK(s.theta()[1] > s.theta()[0]);
  CHECK(s.theta()[1] > s.theta()[2]);
  CHECK(std::accumulate(s.theta().begin(), s.theta().end(), 0.0) == doctest::Approx(0.0).epsilon(1e-12));

  BiasPotential c(0.0, 2.0, 2, 0.5);
  update_bias(c, {0}, {0.5}, BiasUpdate::classical);
  CHECK(c.theta()[0] - c.theta()[1] == doctest::Approx(0.5));
}

TEST_CASE("flat histogram arithmetic") {
  BiasPotential ten(0.0, 10.0, 10);
  for (int j = 0; j < 9; ++j)
    for (int k = 0; k < 10; ++k) ten.record(j, j + 0.5);
  CHECK_FALSE(flat_histogram(ten, 0.9));
  CHECK(ten.epoch() == 0);

  BiasPotential two(0.0, 2.0, 2, 0.8);
  for (int k = 0; k < 55; ++k) two.record(0, 0.5);
  for (int k = 0; k < 45; ++k) two.record(1, 1.5);
  CHECK(flat_histogram(two, 0.2));
  CHECK(two.epoch() == 1);
  CHECK(two.eta() == 0.4);
  CHECK(two.total_count() == 0.0);

  BiasPotential even(0.0, 3.0, 3);
  for (int j = 0; j < 3; ++j) even.record(j, j + 0.5);
  CHECK(flat_histogram(even, 1e-6));

  BiasPotential few(0.0, 3.0, 3);
  few.record(0, 0.5);
  CHECK_FALSE(flat_histogram(few, 0.9));
}

TEST_CASE("bin splitting") {
  BiasPotential b(0.0, 4.0, 4);
  b.set_theta({0.1, 0.2, 0.3, -0.6});
  for (int k = 0; k < 200; ++k) b.record(1, 1.0 + 0.01 * (k % 50) / 50.0);
  for (int k = 0; k < 200; ++k) b.record(2, 2.0 + (k + 0.5) / 200.0);
  CHECK(maybe_split_bin(b) == 1);
  CHECK(b.bins() == 5);
  for (std::size_t j = 1; j < b.edges().size(); ++j) CHECK(b.edges()[j] > b.edges()[j - 1]);
  CHECK(b.edges()[1] == 1.0);
  CHECK(b.edges()[2] > 1.0);
  CHECK(b.edges()[2] < 1.01);
  CHECK(b.theta()[1] == 0.2);
  CHECK(b.theta()[2] == 0.2);
  CHECK(b.counts()[1] + b.counts()[2] == 200.0);

  // too few samples
  BiasPotential c(0.0, 2.0, 2);
  for (int k = 0; k < 99; ++k) c.record(0, 0.0);
  CHECK(maybe_split_bin(c) == 0);

  // boundary bin extends to the observed range
  BiasPotential e(0.0, 2.0, 2);
  for (int k = 0; k < 150; ++k) e.record(1, 5.0 + k * 0.01, true);
  CHECK(maybe_split_bin(e) == 1);
  CHECK(e.bins() == 3);
  CHECK(e.z_max() == doctest::Approx(6.49));
  CHECK(e.edges()[2] > 5.0);

  BiasPotential fixed(0.0, 2.0, 2);
  for (int k = 0; k < 150; ++k) fixed.record(1, 5.0 + k * 0.01, true);
  CHECK(maybe_split_bin(fixed, 100, 0.9, 64, false) == 0);
  CHECK(fixed.z_max() == 2.0);

  BiasPotential cap(0.0, 2.0, 2);
  for (int k = 0; k < 150; ++k) cap.record(0, 0.001);
  CHECK(maybe_split_bin(cap, 100, 0.9, 2) == 0);
}

TEST_CASE("importance weights") {
  BiasPotential b(0.0, 3.0, 3);
  const std::vector<double> xi{0.5, 1.5, 2.5, 2.6};
  auto w = importance_reweight(xi, b);
  for (double v : w) CHECK(v == doctest::Approx(0.25));
  b.set_theta({0.0, std::log(2.0), std::log(3.0)});
  w = importance_reweight(xi, b);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  CHECK(w[1] / w[0] == doctest::Approx(2.0));
  CHECK(w[3] / w[0] == doctest::Approx(3.0));
}

TEST_CASE("frozen wl kernel detailed balance and empirical transitions") {
  const auto p = bimodal16();
  const auto lp = logs(p);
  TabularTarget t(p);
  TabularNeighbourKernel k(std::vector<std::vector<int>>{});
  const Matrix q = k.proposal_matrix(16);
  double zmin = 1e300, zmax = -1e300;
  for (double v : lp) {
    zmin = std::min(zmin, -v);
    zmax = std::max(zmax, -v);
  }
  BiasPotential b(zmin, zmax, 6);
  RngStream rng(9, 0);
  std::vector<double> th(6);
  for (double& v : th) v = 4.0 * (rng.uniform() - 0.5);
  b.set_theta(th);
  const auto m = wl_exact_matrix(lp, q, b);
  CHECK(m.detailed_balance_residual() <= 1e-10);
  CHECK(m.stationarity_residual() <= 1e-10);

  const auto propose = neighbour_proposer(t, k);
  const std::size_t start = 8;
  std::vector<double> hits(16, 0.0);
  const int n = 200000;
  for (int r = 0; r < n; ++r) {
    WlChain c = make_wl_chain(t, TabularTarget::state(start), b);
    wl_step(c, b, propose, rng);
    hits[static_cast<std::size_t>(std::llround(c.state.position[0]))] += 1.0;
  }
  for (Eigen::Index j = 0; j < 16; ++j) {
    const double pj = m.matrix()(static_cast<Eigen::Index>(start), j);
    const double se = std::sqrt(pj * (1 - pj) / n) + 1e-12;
    CHECK(std::abs(hits[static_cast<std::size_t>(j)] / n - pj) <= 4 * se);
  }
}

TEST_CASE("pawl weighted mean on a bimodal table") {
  const auto p = bimodal16();
  std::vector<std::vector<int>> all(16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j)
      if (j != i) all[static_cast<std::size_t>(i)].push_back(j);
  TabularTarget t(p, all);
  double exact = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) exact += static_cast<double>(i) * p[i];
  PawlConfig cfg;
  cfg.chains = 4;
  cfg.pilot_iterations = 5000;
  cfg.iterations = 250000;
  cfg.burn_in = 25000;
  const auto r = pawl_run(t, TabularTarget::state(3), cfg, 11);
  CHECK(r.samples.size() == 4 * (cfg.iterations - cfg.burn_in));
  CHECK(r.weights.size() == r.samples.size());
  CHECK(std::abs(weighted_mean(r)[0] - exact) < 0.02);
  CHECK(r.epoch_transitions >= 1);
  // eta halves exactly at each epoch transition
  CHECK(r.bias.eta() == doctest::Approx(std::ldexp(cfg.eta0, -r.epoch_transitions)));
  double last = 1e300;
  for (const auto& row : r.bias_history) {
    CHECK(row.eta <= last);
    last = row.eta;
  }
}

TEST_CASE("pawl determinism and thread independence") {
  std::vector<std::uint8_t> y(16);
  for (int i = 0; i < 16; ++i) y[static_cast<std::size_t>(i)] = (i / 4 + i) % 2;
  AutologisticTarget t(AutologisticParams::make(4, 4, y, 1.0, 0.7));
  PawlConfig cfg;
  cfg.chains = 3;
  cfg.pilot_iterations = 500;
  cfg.iterations = 3000;
  cfg.split_every = 500;
  const Vector init = Vector::Zero(16);
  const auto a = pawl_run(t, init, cfg, 5);
  cfg.threads = 3;
  const auto b = pawl_run(t, init, cfg, 5);
  CHECK(a.xi_all == b.xi_all);
  CHECK(a.bias.theta() == b.bias.theta());
  const auto c = pawl_run(t, init, cfg, 6);
  CHECK(a.xi_all != c.xi_all);

  std::ostringstream os;
  write_bias_csv(a.bias_history, os);
  CHECK(os.str().rfind("epoch,eta,bin_lo,bin_hi,theta,occupancy\n", 0) == 0);
  std::ostringstream ws;
  write_trace_csv(a.samples, ws, &a.weights);
  CHECK(ws.str().find(",x_15,weight\n") != std::string::npos);
}

TEST_CASE("pawl pilot on a constant energy is an error") {
  TabularTarget flat(std::vector<double>(5, 0.2));
  PawlConfig cfg;
  cfg.pilot_iterations = 100;
  cfg.iterations = 10;
  CHECK_THROWS_AS(pawl_run(flat, TabularTarget::state(0), cfg, 1), Error);
  cfg.chains = 0;
  CHECK_THROWS_AS(pawl_run(flat, TabularTarget::state(0), cfg, 1), Error);
}

TEST_CASE("pawl on a continuous target") {
  GaussianMixtureTarget t(GaussianMixtureParams::benchmark(2));
  PawlConfig cfg;
  cfg.chains = 2;
  cfg.pilot_iterations = 2000;
  cfg.iterations = 5000;
  const auto r = pawl_run(t, Vector::Ones(2), cfg, 2);
  CHECK(r.acceptance > 0.05);
  CHECK(r.acceptance < 0.95);
  CHECK(r.samples.size() == 10000);
}
