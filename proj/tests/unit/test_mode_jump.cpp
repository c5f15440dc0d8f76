#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mmcmc/error.hpp"
#include "mmcmc/mode_jump.hpp"
#include "mmcmc/targets.hpp"

using namespace mmcmc;

namespace {

GaussianMixtureParams mixture1d(double m, double var) {
  GaussianMixtureParams p;
  p.mean1 = Vector::Constant(1, -m);
  p.mean2 = Vector::Constant(1, m);
  p.var1 = var;
  p.var2 = var;
  return p;
}

class BadGradient final : public TargetModel {
 public:
  Eigen::Index dimension() const override { return 1; }
  StateSpace space() const override { return StateSpace::continuous; }
  double log_density(const Vector& x) const override { return -x.squaredNorm(); }
  bool has_gradient() const override { return true; }
  Vector gradient(const Vector&) const override { return Vector::Constant(1, std::nan("")); }
};

class Flat final : public TargetModel {
 public:
  explicit Flat(Eigen::Index d) : d_(d) {}
  Eigen::Index dimension() const override { return d_; }
  StateSpace space() const override { return StateSpace::continuous; }
  double log_density(const Vector&) const override { return 0.0; }
  bool has_gradient() const override { return true; }
  Vector gradient(const Vector& x) const override { return Vector::Zero(x.size()); }

 private:
  Eigen::Index d_;
};

std::vector<Vector> grid_starts(int d, double lo, double hi, int n) {
  std::vector<Vector> s;
  if (d == 1) {
    for (int i = 0; i < n; ++i) s.push_back(Vector::Constant(1, lo + (hi - lo) * i / (n - 1)));
    return s;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vector x(2);
      x << lo + (hi - lo) * i / (n - 1), lo + (hi - lo) * j / (n - 1);
      s.push_back(x);
    }
  return s;
}

ModeAtlas oracle_atlas(const GaussianMixtureParams& p, KernelFamily f = KernelFamily::gaussian) {
  const auto d = p.dimension();
  return ModeAtlas({p.mean1, p.mean2},
                   {p.var1 * Matrix::Identity(d, d), p.var2 * Matrix::Identity(d, d)}, {0.5, 0.5}, f);
}

}  // namespace

TEST_CASE("gradient ascent") {
  GaussianMixtureTarget sym(mixture1d(1.0, 0.1));
  const auto at_zero = gradient_ascent(Vector::Zero(1), sym);
  CHECK(at_zero.converged);
  CHECK(at_zero.mode[0] == 0.0);
  CHECK(at_zero.iterations == 0);
  const auto r = gradient_ascent(Vector::Constant(1, 0.5), sym);
  CHECK(r.converged);
  CHECK(r.gradient_norm < 1e-8);
  CHECK(r.mode[0] == doctest::Approx(1.0).epsilon(1e-3));

  GaussianMixtureTarget bench(GaussianMixtureParams::benchmark(2));
  const auto m = gradient_ascent(Vector::Constant(2, 2.0), bench);
  CHECK(m.converged);
  CHECK((m.mode - Vector::Ones(2)).norm() < 1e-2);

  BadGradient bad;
  CHECK_THROWS_AS(gradient_ascent(Vector::Ones(1), bad), NumericalError);
  CHECK_THROWS_AS(gradient_ascent(Vector::Ones(1), TabularTarget({0.5, 0.5})), Error);
}

TEST_CASE("find modes") {
  GaussianMixtureTarget bench(GaussianMixtureParams::benchmark(2));
  auto starts = grid_starts(2, -3.0, 3.0, 7);
  const auto atlas = find_modes(bench, starts);
  REQUIRE(atlas.size() == 2);
  CHECK((atlas.center(0) + Vector::Ones(2)).norm() < 1e-2);
  CHECK((atlas.center(1) - Vector::Ones(2)).norm() < 1e-2);
  CHECK(atlas.weight(0) == 0.5);
  CHECK(atlas.family() == KernelFamily::student_t);
  CHECK(atlas.dof() == 7.0);
  // local covariance close to the component variance
  CHECK(atlas.covariance(1)(0, 0) == doctest::Approx(std::sqrt(0.02)).epsilon(1e-3));
  CHECK(std::abs(atlas.covariance(1)(0, 1)) < 1e-6);

  std::reverse(starts.begin(), starts.end());
  std::rotate(starts.begin(), starts.begin() + 11, starts.end());
  CHECK(find_modes(bench, starts) == atlas);

  const auto again = find_modes(bench, {atlas.center(1), atlas.center(0)});
  REQUIRE(again.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK((again.center(i) - atlas.center(i)).norm() < 1e-8);

  const auto one = find_modes(bench, {Vector::Constant(2, 0.8), Vector::Constant(2, 1.5), Vector::Constant(2, 2.5)});
  CHECK(one.size() == 1);

  Flat flat(2);
  CHECK_THROWS_AS(find_modes(flat, {Vector::Zero(2)}), Error);
  CHECK_THROWS_AS(find_modes(bench, {}), Error);
}

TEST_CASE("stationary points of a symmetric mixture") {
  GaussianMixtureTarget sym(mixture1d(1.0, 0.1));
  const auto pts = find_stationary_points(sym, grid_starts(1, -2.0, 2.0, 21));
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].kind == StationaryKind::maximum);
  CHECK(pts[1].kind == StationaryKind::minimum);
  CHECK(pts[2].kind == StationaryKind::maximum);
  CHECK(pts[1].x[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(to_string(StationaryKind::saddle) == "saddle");
}

TEST_CASE("sur profile has two maxima and one saddle") {
  SurProfileTarget sur(SurData::bimodal_example());
  const auto pts = find_stationary_points(sur, grid_starts(2, -4.0, 4.0, 9));
  REQUIRE(pts.size() == 3);
  int maxima = 0, saddles = 0;
  for (const auto& p : pts) {
    maxima += p.kind == StationaryKind::maximum;
    saddles += p.kind == StationaryKind::saddle;
    CHECK(p.x.norm() < 5.0);
  }
  CHECK(maxima == 2);
  CHECK(saddles == 1);
}

TEST_CASE("atlas validation and serialization") {
  GaussianMixtureTarget bench(GaussianMixtureParams::benchmark(3));
  const auto atlas = find_modes(bench, {-Vector::Ones(3) * 1.5, Vector::Ones(3) * 1.5});
  const auto text = serialize_atlas(atlas);
  CHECK(text.find("\"covariance\"") != std::string::npos);
  CHECK(parse_atlas(text) == atlas);
  CHECK_THROWS_AS(parse_atlas("{\"dimension\": 2}"), Error);
  CHECK_THROWS_AS(ModeAtlas({Vector::Zero(2)}, {Matrix::Zero(2, 2)}, {1.0}), Error);
  CHECK_THROWS_AS(ModeAtlas({Vector::Zero(2)}, {Matrix::Identity(2, 2)}, {0.0}), Error);
  CHECK_THROWS_AS(ModeAtlas({}, {}, {}), Error);
  ModeAtlas w({Vector::Zero(1), Vector::Ones(1)}, {Matrix::Identity(1, 1), Matrix::Identity(1, 1)}, {1.0, 3.0});
  CHECK(w.weight(1) == 0.75);
  CHECK(parse_kernel_family("gaussian") == KernelFamily::gaussian);
  CHECK_THROWS_AS(parse_kernel_family("cauchy"), Error);
}

TEST_CASE("augmented density") {
  const auto p = GaussianMixtureParams::benchmark(4);
  GaussianMixtureTarget t(p);
  const ModeAtlas single({p.mean1}, {Matrix::Identity(4, 4)}, {1.0});
  const ModeAtlas two = oracle_atlas(p, KernelFamily::student_t);
  RngStream rng(4, 0);
  for (int k = 0; k < 100; ++k) {
    Vector x(4);
    for (Eigen::Index j = 0; j < 4; ++j) x[j] = 2.0 * rng.normal();
    CHECK(jams_augmented_logdensity(x, 0, single, t) == t.log_density(x));
    const double a0 = jams_augmented_logdensity(x, 0, two, t);
    const double a1 = jams_augmented_logdensity(x, 1, two, t);
    const double m = std::max(a0, a1);
    CHECK(m + std::log(std::exp(a0 - m) + std::exp(a1 - m)) == doctest::Approx(t.log_density(x)).epsilon(1e-13));
  }
  GaussianMixtureTarget sym(mixture1d(1.0, 0.3));
  const auto sa = oracle_atlas(mixture1d(1.0, 0.3));
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(jams_augmented_logdensity(Vector::Zero(1), i, sa, sym) ==
          doctest::Approx(sym.log_density(Vector::Zero(1)) - std::log(2.0)));
  // far from every kernel the log-sum-exp still gives a finite answer
  CHECK(std::isfinite(jams_augmented_logdensity(-20.0, Vector::Constant(1, 1e3), 0, sa)));
  CHECK_THROWS_AS(jams_augmented_logdensity(0.0, Vector::Zero(1), 2, sa), Error);
}

TEST_CASE("affine jumps between matched gaussian modes are always accepted") {
  const auto p = GaussianMixtureParams::benchmark(5);
  GaussianMixtureTarget t(p);
  const auto atlas = oracle_atlas(p);
  RngStream rng(8, 0);
  for (int k = 0; k < 100; ++k) {
    Vector x(5);
    for (Eigen::Index j = 0; j < 5; ++j) x[j] = 1.5 * rng.normal();
    const std::size_t mode = rng.index(2);
    JamsState s = make_jams_state(x, mode, atlas, t);
    CHECK(jams_jump_step(s, atlas, t, rng));
    CHECK(s.mode != mode);
  }
  // mirrored identical modes: centre maps to centre
  GaussianMixtureTarget sym(mixture1d(2.0, 0.5));
  const auto sa = oracle_atlas(mixture1d(2.0, 0.5), KernelFamily::student_t);
  JamsState s = make_jams_state(sa.center(0), 0, sa, sym);
  CHECK(jams_jump_step(s, sa, sym, rng));
  CHECK(s.x[0] == doctest::Approx(2.0));
  CHECK(s.mode == 1);
  const ModeAtlas single({Vector::Zero(1)}, {Matrix::Identity(1, 1)}, {1.0});
  CHECK_THROWS_AS(jams_jump_step(s, single, sym, rng), Error);
}

TEST_CASE("jams local step with one mode is adaptive rwm") {
  GaussianMixtureTarget t(GaussianMixtureParams::benchmark(3));
  const ModeAtlas single({Vector::Ones(3)}, {Matrix::Identity(3, 3)}, {1.0});
  AdaptiveRwmState a(3), b(3);
  RngStream r1(2, 0), r2(2, 0);
  JamsState s = make_jams_state(Vector::Ones(3), 0, single, t);
  ChainState c = ChainState::at(t, Vector::Ones(3));
  for (int k = 0; k < 2000; ++k) {
    const bool x = jams_local_step(s, single, t, a, r1);
    const bool y = rwm_step(c, t, b, r2);
    b.record(y);
    rwm_adapt(b, y, c.position);
    CHECK(x == y);
  }
  CHECK(s.x == c.position);
  CHECK(a.log_scale() == b.log_scale());
}

TEST_CASE("frozen jams local kernel is reversible on a table") {
  std::vector<double> lp(21);
  for (int k = 0; k < 21; ++k) lp[static_cast<std::size_t>(k)] = std::log(std::exp(-0.5 * (k - 5) * (k - 5) / 4.0) + std::exp(-0.5 * (k - 15) * (k - 15) / 2.0));
  const ModeAtlas atlas({Vector::Constant(1, 5.0), Vector::Constant(1, 15.0)},
                        {Matrix::Constant(1, 1, 4.0), Matrix::Constant(1, 1, 2.0)}, {0.5, 0.5});
  TabularNeighbourKernel nb(std::vector<std::vector<int>>{});
  Matrix q = nb.proposal_matrix(21);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto m = jams_exact_local_matrix(lp, atlas, i, q);
    CHECK(m.detailed_balance_residual() <= 1e-10);
    CHECK(m.stationarity_residual() <= 1e-10);
  }
}

TEST_CASE("jams run on a small mixture") {
  const auto p = GaussianMixtureParams::benchmark(2);
  GaussianMixtureTarget t(p);
  JamsConfig cfg;
  cfg.refine_iterations = 2000;
  cfg.iterations = 40000;
  const auto starts = grid_starts(2, -3.0, 3.0, 4);
  const auto r = jams_run(t, starts, cfg, 3);
  REQUIRE(r.atlas.size() == 2);
  CHECK(r.atlas_history.size() == 2);
  CHECK(r.trace.size() == 40001);
  CHECK(rmse_over_sqrt_d(r.trace, Vector::Zero(2)) < 0.1);
  CHECK(r.jump_acceptance > 0.5);
  std::size_t in_mode1 = 0;
  for (const auto& m : r.trace.meta()) in_mode1 += *m.aux_index == 1 ? 1 : 0;
  CHECK(std::abs(static_cast<double>(in_mode1) / 40000.0 - 0.5) < 0.1);
  const auto again = jams_run(t, starts, cfg, 3);
  for (std::size_t n = 0; n < r.trace.size(); n += 997) CHECK(again.trace.state(n) == r.trace.state(n));
  cfg.jump = JumpMove::independent;
  const auto ind = jams_run(t, r.atlas, cfg, 4);
  CHECK(rmse_over_sqrt_d(ind.trace, Vector::Zero(2)) < 0.1);
}

TEST_CASE("jams per-mode local acceptance near the optimal rate") {
  const auto p = GaussianMixtureParams::benchmark(8);
  GaussianMixtureTarget t(p);
  JamsConfig cfg;
  cfg.refine_iterations = 5000;
  cfg.iterations = 30000;
  const auto r = jams_run(t, oracle_atlas(p, KernelFamily::student_t), cfg, 12);
  REQUIRE(r.local_acceptance.size() == 2);
  for (double a : r.local_acceptance) {
    CHECK(a > 0.15);
    CHECK(a < 0.35);
  }
}

TEST_CASE("ram proposals") {
  Flat flat(2);
  RngStream rng(1, 0);
  RamConfig cfg;
  cfg.scale = 0.5;
  const auto p = ram_propose(Vector::Zero(2), 0.0, flat, cfg, rng);
  CHECK(p.ok);
  CHECK(p.down_draws == 1);
  CHECK(p.up_draws == 1);
  CHECK_THROWS_AS(ram_propose(Vector::Zero(2), 0.0, flat, RamConfig{0.0, 10}, rng), Error);

  // downhill moves are always taken
  GaussianMixtureTarget sym(mixture1d(2.0, 0.25));
  int downhill_first = 0, downhill_total = 0;
  for (int k = 0; k < 2000; ++k) {
    const auto q = ram_propose(Vector::Constant(1, 2.0), sym.log_density(Vector::Constant(1, 2.0)), sym, cfg, rng);
    if (q.ok && q.log_pi_z <= sym.log_density(Vector::Constant(1, 2.0))) ++downhill_total;
    if (q.down_draws == 1) ++downhill_first;
  }
  CHECK(downhill_total == 2000);
  CHECK(downhill_first == 2000);  // every draw from the mode goes down

  // tabular R
  TabularTarget tab(std::vector<double>(10, 0.1));
  RamConfig tc;
  tc.scale = 3;
  std::vector<int> steps(7, 0);
  for (int k = 0; k < 7000; ++k) ++steps[static_cast<std::size_t>(std::lround(ram_draw(Vector::Constant(1, 5.0), tab, tc, rng)[0]) - 2)];
  CHECK(steps[3] == 0);
  for (int j : {0, 1, 2, 4, 5, 6}) CHECK(std::abs(steps[static_cast<std::size_t>(j)] - 1000 * 7 / 6) < 150);
}

TEST_CASE("ram hops between basins more often than rwm") {
  GaussianMixtureTarget t(mixture1d(2.5, 0.25));
  RamConfig cfg;
  cfg.scale = 1.0;
  RngStream rng(6, 0);
  int ram_cross = 0, rwm_cross = 0;
  const Vector x = Vector::Constant(1, 2.5);
  const double lx = t.log_density(x);
  for (int k = 0; k < 20000; ++k) {
    const auto p = ram_propose(x, lx, t, cfg, rng);
    if (p.ok && p.y[0] < 0.0) ++ram_cross;
    if (x[0] + cfg.scale * rng.normal() < 0.0) ++rwm_cross;
  }
  CHECK(ram_cross > 2 * rwm_cross);
}

TEST_CASE("ram stationarity on a bimodal table") {
  std::vector<double> w(41);
  for (int k = 0; k < 41; ++k)
    w[static_cast<std::size_t>(k)] = std::exp(-0.5 * (k - 10) * (k - 10) / 4.0) + 0.7 * std::exp(-0.5 * (k - 29) * (k - 29) / 6.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
  TabularTarget t(w);
  for (double scale : {8.0, 12.0, 16.0}) {
    CAPTURE(scale);
    RamKernel k(RamConfig{scale, 1000});
    RngStream rng(static_cast<std::uint64_t>(scale), 0);
    const Trace tr = run_chain(t, k, TabularTarget::state(10), 400000, rng);
    CHECK(tv_distance(empirical_distribution(tr, 41, 1000), w) < 0.02);
  }
}

TEST_CASE("ram balances a symmetric continuous mixture") {
  GaussianMixtureTarget t(mixture1d(2.0, 0.25));
  RamKernel k(RamConfig{1.0, 1000});
  RngStream rng(31, 0);
  const Trace tr = run_chain(t, k, Vector::Constant(1, 2.0), 1000000, rng);
  std::size_t right = 0;
  for (std::size_t n = 1; n < tr.size(); ++n) right += tr.state(n)[0] > 0.0 ? 1 : 0;
  CHECK(std::abs(static_cast<double>(right) / 1e6 - 0.5) < 0.05);
  CHECK(tr.acceptance_rate() > 0.05);
}

TEST_CASE("ram budget exhaustion is a rejection") {
  GaussianMixtureTarget t(mixture1d(2.0, 0.01));
  RamKernel k(RamConfig{5.0, 1});
  RngStream rng(2, 0);
  const Trace tr = run_chain(t, k, Vector::Constant(1, 2.0), 2000, rng);
  CHECK(k.budget_failures() > 0);
  CHECK_FALSE(tr.failure().has_value());
  CHECK(std::isfinite(t.log_density(tr.state(tr.size() - 1))));
}
