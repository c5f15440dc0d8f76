#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mmcmc/error.hpp"
#include "mmcmc/rng.hpp"
#include "mmcmc/targets.hpp"

using namespace mmcmc;

namespace {

void check_gradient(const TargetModel& t, const Vector& x) {
  const Vector g = t.gradient(x);
  const Vector fd = finite_difference_gradient(t, x);
  const double scale = std::max(1.0, fd.norm());
  CHECK((g - fd).norm() / scale < 1e-4);
}

}  // namespace

TEST_CASE("benchmark mixture parameters") {
  const auto p = GaussianMixtureParams::benchmark(100);
  CHECK(p.var2 == 1.0);
  CHECK(p.var1 == 0.5);
  CHECK(p.mean1 == -Vector::Ones(100));
  CHECK(p.mean2 == Vector::Ones(100));
}

TEST_CASE("mixture log-density closed forms") {
  GaussianMixtureParams p{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), 1.0, 1.0};
  CHECK(mixture_log_density(Vector::Zero(1), p) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi) - 0.5).epsilon(1e-12));
  CHECK(mixture_log_density(Vector::Zero(1), p) == doctest::Approx(-1.41894).epsilon(1e-5));
  CHECK(mixture_log_density(p.mean1, p) == doctest::Approx(mixture_log_density(p.mean2, p)));
  CHECK(mixture_gradient(Vector::Zero(1), p)[0] == 0.0);
}

TEST_CASE("mixture integrates to one in d=1") {
  const auto p = GaussianMixtureParams::benchmark(1);
  // composite Simpson on [-20, 20]
  const int n = 200000;
  const double h = 40.0 / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * std::exp(mixture_log_density(Vector::Constant(1, -20.0 + i * h), p));
  }
  CHECK(std::abs(s * h / 3.0 - 1.0) < 1e-3);
}

TEST_CASE("mixture gradient") {
  const auto p = GaussianMixtureParams::benchmark(4);
  GaussianMixtureTarget t(p);
  RngStream rng(3, 0);
  for (int i = 0; i < 20; ++i) check_gradient(t, 1.5 * rng.normal_vector(4));
  Vector far = p.mean2;
  far[0] += 100.0 * std::sqrt(p.var2);
  CHECK(t.gradient(far)[0] < 0.0);
}

TEST_CASE("lattice adjacency") {
  const auto pairs = lattice_pairs_8(4, 5);
  std::vector<int> deg(20, 0);
  for (auto [i, j] : pairs) {
    CHECK(i < j);
    ++deg[i];
    ++deg[j];
  }
  CHECK(deg[0] == 3);
  CHECK(deg[4] == 3);
  CHECK(deg[19] == 3);
  CHECK(deg[2] == 5);
  CHECK(deg[5] == 5);
  CHECK(deg[6] == 8);
  CHECK(lattice_pairs_8(2, 2).size() == 6);
}

TEST_CASE("autologistic statistics and density") {
  auto p = AutologisticParams::make(2, 2, {1, 1, 1, 1}, 1.0, 0.7);
  const Vector ones = Vector::Ones(4);
  const auto s = autologistic_suff_stats(ones, p);
  CHECK(s.agree_with_observed == 4);
  CHECK(s.agree_neighbours == 6);
  CHECK(autologistic_log_density_unnorm(ones, p) == doctest::Approx(8.2));
  auto q = AutologisticParams::make(1, 2, {0, 0}, 0.0, 0.0);
  CHECK(autologistic_suff_stats(Vector::Unit(2, 1), q).agree_neighbours == 0);
  CHECK(autologistic_log_density_unnorm(Vector::Unit(2, 1), q) == 0.0);
  CHECK_THROWS(autologistic_suff_stats(Vector::Ones(3), p));
}

TEST_CASE("autologistic site conditional") {
  auto single = AutologisticParams::make(1, 1, {1}, 1.0, 0.7);
  CHECK(autologistic_site_conditional(Vector::Zero(1), 0, single) ==
        doctest::Approx(0.7310585786));
  auto flat = AutologisticParams::make(2, 3, {1, 0, 1, 0, 0, 1}, 0.0, 0.0);
  CHECK(autologistic_site_conditional(Vector::Zero(6), 2, flat) == 0.5);

  AutologisticTarget t(AutologisticParams::make(2, 3, {1, 0, 1, 0, 0, 1}, 1.0, 0.7));
  for (std::uint64_t c = 0; c < 64; ++c) {
    const Vector x = t.decode(c);
    CHECK(t.encode(x) == c);
    for (int i = 0; i < 6; ++i) {
      Vector x1 = x, x0 = x;
      x1[i] = 1.0;
      x0[i] = 0.0;
      const double l1 = t.log_density(x1), l0 = t.log_density(x0);
      CHECK(t.site_conditional(x, i) == doctest::Approx(1.0 / (1.0 + std::exp(l0 - l1))));
      CHECK(t.flip_delta(x, i) == doctest::Approx(t.log_density(x[i] == 1.0 ? x0 : x1) - t.log_density(x)));
    }
  }
}

TEST_CASE("tabular target validation") {
  CHECK_THROWS(TabularTarget({0.5, 0.4}));
  CHECK_THROWS(TabularTarget({1.0, 0.0}));
  TabularTarget t = TabularTarget::from_log_weights({0.0, std::log(3.0)});
  CHECK(t.probability(1) == doctest::Approx(0.75));
  CHECK(t.log_density(TabularTarget::state(2)) == kLogZero);
  CHECK(t.log_density(Vector::Constant(1, 1.6)) == kLogZero);
  const auto table = *t.exact_table();
  CHECK(std::exp(t.log_density(TabularTarget::state(0))) == doctest::Approx(table[0]).epsilon(1e-10));
}

TEST_CASE("sur profile likelihood") {
  SurData d;
  d.x1 = Matrix::Ones(10, 1);
  d.x2 = Matrix::Ones(10, 1);
  d.y1 = Vector::Zero(10);
  d.y2 = Vector::Zero(10);
  // residuals +-1 in equation 1 and alternating signs in equation 2: Sigma = I
  for (int i = 0; i < 10; ++i) {
    d.y1[i] = i % 2 ? 1.0 : -1.0;
    d.y2[i] = (i / 2) % 2 ? 1.0 : -1.0;
  }
  d.y2[8] = 1.0;
  d.y2[9] = 1.0;
  const Matrix s = sur_residual_covariance(Vector::Zero(2), d);
  REQUIRE(s.determinant() == doctest::Approx(1.0));
  CHECK(sur_profile_loglik(Vector::Zero(2), d) == doctest::Approx(-28.3788).epsilon(1e-5));

  SurData singular = d;
  singular.y2 = singular.y1;
  CHECK_THROWS_AS(sur_profile_loglik(Vector::Zero(2), singular), NumericalError);
}

TEST_CASE("sur symmetries and gradient") {
  const SurData d = SurData::bimodal_example();
  SurProfileTarget t(d), ts(d.swapped());
  RngStream rng(8, 0);
  for (int i = 0; i < 20; ++i) {
    const Vector b = 1.5 * rng.normal_vector(2);
    Vector bs(2);
    bs << b[1], b[0];
    CHECK(t.log_density(b) == doctest::Approx(ts.log_density(bs)).epsilon(1e-12));
    check_gradient(t, b);
  }
}

TEST_CASE("zellner igls") {
  // Identical designs: the first update is equation-wise OLS.
  SurData d;
  RngStream rng(4, 0);
  const int n = 40;
  d.x1 = Matrix(n, 1);
  for (int i = 0; i < n; ++i) d.x1(i, 0) = rng.normal();
  d.x2 = d.x1;
  d.y1 = 0.7 * d.x1.col(0) + 0.5 * rng.normal_vector(n);
  d.y2 = -1.2 * d.x2.col(0) + 0.5 * rng.normal_vector(n);
  const IglsResult r = zellner_igls(d);
  const double ols1 = d.x1.col(0).dot(d.y1) / d.x1.col(0).squaredNorm();
  const double ols2 = d.x2.col(0).dot(d.y2) / d.x2.col(0).squaredNorm();
  CHECK(r.first_update[0] == doctest::Approx(ols1).epsilon(1e-12));
  CHECK(r.first_update[1] == doctest::Approx(ols2).epsilon(1e-12));

  // Distinct designs, unimodal data: converges to a stationary point.
  for (int i = 0; i < n; ++i) d.x2(i, 0) = rng.normal();
  d.y2 = -1.2 * d.x2.col(0) + 0.4 * d.y1 + 0.5 * rng.normal_vector(n);
  const IglsResult u = zellner_igls(d);
  CHECK(u.converged);
  SurProfileTarget t(d);
  CHECK(finite_difference_gradient(t, u.beta).norm() < 1e-6);

  SurData bad = d;
  bad.x1 = Matrix::Zero(n, 1);
  CHECK_THROWS(zellner_igls(bad));
}
