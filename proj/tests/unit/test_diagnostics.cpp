#include <cmath>

#include "doctest.h"
#include "mmcmc/diagnostics.hpp"
#include "mmcmc/error.hpp"
#include "mmcmc/rng.hpp"

using namespace mmcmc;

namespace {

Matrix two_state(double p, double q) {
  Matrix m(2, 2);
  m << 1 - p, p, q, 1 - q;
  return m;
}

}  // namespace

TEST_CASE("build_transition_matrix small cases") {
  const auto id = build_transition_matrix({0.0, 1.0, -2.0}, Matrix::Identity(3, 3));
  CHECK(id.matrix() == Matrix::Identity(3, 3));
  Matrix flip(2, 2);
  flip << 0, 1, 1, 0;
  const auto f = build_transition_matrix({0.0, 0.0}, flip);
  CHECK(f.matrix() == flip);
  const auto ind = independence_sampler_matrix({0.5, 0.5}, {0.25, 0.75});
  CHECK(ind.matrix()(0, 0) == doctest::Approx(0.75));
  CHECK(ind.matrix()(0, 1) == doctest::Approx(0.25));
  CHECK(ind.matrix()(1, 0) == doctest::Approx(0.25));
  CHECK(ind.matrix()(1, 1) == doctest::Approx(0.75));
  CHECK(ind.reversible());
}

TEST_CASE("ExactKernelMatrix validates rows") {
  Matrix bad(2, 2);
  bad << 0.5, 0.4, 0.5, 0.5;
  CHECK_THROWS(ExactKernelMatrix(bad, {0.5, 0.5}));
}

TEST_CASE("spectral gap closed forms") {
  const ExactKernelMatrix m(two_state(0.3, 0.3), {0.5, 0.5});
  const auto s = spectral_gap(m);
  REQUIRE(s.eigenvalues_re.size() == 1);
  CHECK(s.eigenvalues_re[0] == doctest::Approx(0.4));
  CHECK(s.right_gap == doctest::Approx(0.6));

  Matrix iid(3, 3);
  iid.rowwise() = Eigen::RowVector3d(0.2, 0.3, 0.5);
  CHECK(spectral_gap(ExactKernelMatrix(iid, {0.2, 0.3, 0.5})).absolute_gap == doctest::Approx(1.0));
  CHECK(spectral_gap(ExactKernelMatrix(Matrix::Identity(3, 3), {0.2, 0.3, 0.5})).right_gap ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Non-reversible cycle: eigenvalues on the zero-mean subspace are complex.
  Matrix cyc(3, 3);
  cyc << 0.5, 0.5, 0, 0, 0.5, 0.5, 0.5, 0, 0.5;
  const ExactKernelMatrix c(cyc, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK_FALSE(c.reversible());
  const auto sc = spectral_gap(c);
  CHECK(sc.right_gap == doctest::Approx(0.75));
  CHECK(sc.absolute_gap == doctest::Approx(0.5));
}

TEST_CASE("conductance closed forms") {
  const ExactKernelMatrix m(two_state(0.3, 0.3), {0.5, 0.5});
  CHECK(conductance(m).kappa == doctest::Approx(0.6));
  Matrix iid(3, 3);
  iid.rowwise() = Eigen::RowVector3d(0.2, 0.3, 0.5);
  CHECK(conductance(ExactKernelMatrix(iid, {0.2, 0.3, 0.5})).kappa == doctest::Approx(1.0));
  CHECK(conductance(ExactKernelMatrix(Matrix::Identity(3, 3), {0.2, 0.3, 0.5})).kappa == 0.0);

  Matrix iso(3, 3);
  iso << 0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 1;
  const auto r = conductance(ExactKernelMatrix(iso, {0.25, 0.25, 0.5}));
  CHECK(r.kappa == 0.0);
  CHECK_THROWS(conductance(ExactKernelMatrix(Matrix::Identity(17, 17), std::vector<double>(17, 1.0))));
}

TEST_CASE("cheeger sandwich") {
  const auto c = cheeger_check(ExactKernelMatrix(two_state(0.3, 0.3), {0.5, 0.5}));
  CHECK(c.holds);
  CHECK(c.lower_bound == doctest::Approx(0.045));
  CHECK(c.upper_margin == doctest::Approx(0.0).epsilon(1e-12));
  Matrix iid(2, 2);
  iid.rowwise() = Eigen::RowVector2d(0.4, 0.6);
  CHECK(cheeger_check(ExactKernelMatrix(iid, {0.4, 0.6})).holds);
}

TEST_CASE("jump gap") {
  const auto r = jump_gap_check({0.5, 0.5}, {0.25, 0.75});
  CHECK(r.w_star == doctest::Approx(2.0));
  CHECK(r.exact_gap == doctest::Approx(0.5));
  CHECK(r.match);
  const auto same = jump_gap_check({0.1, 0.6, 0.3}, {0.1, 0.6, 0.3});
  CHECK(same.w_star == doctest::Approx(1.0));
  CHECK(same.exact_gap == doctest::Approx(1.0));
  CHECK_THROWS(jump_gap_check({0.5, 0.5}, {1.0, 0.0}));
}

TEST_CASE("inhomogeneity factor") {
  Matrix t(2, 2);
  t << 2.0, 0.3, 0.3, 1.0;
  CHECK(inhomogeneity_factor(t, 3.7 * t) == doctest::Approx(1.0));
  CHECK(inhomogeneity_factor(Matrix::Identity(2, 2), Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix()) ==
        doctest::Approx(10.0 / 9.0));
  CHECK_THROWS(inhomogeneity_factor(Matrix::Identity(2, 2), -Matrix::Identity(2, 2)));
  CHECK_THROWS(inhomogeneity_factor(Matrix::Identity(2, 2), Matrix::Identity(3, 3)));
}

TEST_CASE("rmse over sqrt d") {
  Trace at_mode(4, StateSpace::continuous);
  at_mode.push_initial(Vector::Ones(4));
  at_mode.push(Vector::Ones(4), {});
  CHECK(rmse_over_sqrt_d(at_mode, Vector::Zero(4)) == doctest::Approx(1.0));
  Trace mixed(4, StateSpace::continuous);
  mixed.push_initial(Vector::Ones(4));
  mixed.push(-Vector::Ones(4), {});
  CHECK(rmse_over_sqrt_d(mixed, Vector::Zero(4)) == doctest::Approx(0.0));

  RngStream rng(1, 0);
  Trace tr(3, StateSpace::continuous), rot(3, StateSpace::continuous);
  const Matrix q = Eigen::HouseholderQR<Matrix>(Matrix::Random(3, 3)).householderQ();
  for (int i = 0; i < 50; ++i) {
    const Vector x = rng.normal_vector(3);
    if (i == 0) {
      tr.push_initial(x);
      rot.push_initial(q * x);
    } else {
      tr.push(x, {});
      rot.push(q * x, {});
    }
  }
  const Vector mu(Eigen::Vector3d(0.1, -0.2, 0.3));
  CHECK(rmse_over_sqrt_d(tr, mu) == doctest::Approx(rmse_over_sqrt_d(rot, q * mu)));
}

TEST_CASE("round trip rate") {
  ReplicaIndexTrace none(10, std::vector<int>{1, 2, 3});
  CHECK(round_trip_rate(none, 3) == 0.0);
  ReplicaIndexTrace alt;
  for (int s = 0; s <= 100; ++s) alt.push_back(s % 2 == 0 ? std::vector<int>{1, 2} : std::vector<int>{2, 1});
  // each replica completes one trip every two sweeps
  CHECK(round_trip_rate(alt, 2) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("total variation") {
  CHECK(tv_distance({0.2, 0.8}, {0.2, 0.8}) == 0.0);
  CHECK(tv_distance({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(0.5));
  CHECK(tv_distance({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0));
  CHECK_THROWS(tv_distance({1.0}, {0.5, 0.5}));
}

TEST_CASE("diagnostics json") {
  const std::string j = diagnostics_json({{"kappa", 0.5}, {"gap", 0.25}});
  CHECK(j.find("\"kappa\": 0.5") != std::string::npos);
  CHECK(j.find("kappa") < j.find("gap"));
}
