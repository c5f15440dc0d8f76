#include "mmcmc/mode_jump.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "mmcmc/error.hpp"

namespace mmcmc {

namespace {

Vector checked_gradient(const TargetModel& target, const Vector& x) {
  Vector g = target.gradient(x);
  if (!g.allFinite()) throw NumericalError("non-finite gradient");
  return g;
}

double lse(const std::vector<double>& v) {
  double m = kLogZero;
  for (double a : v) m = std::max(m, a);
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double a : v) s += std::exp(a - m);
  return m + std::log(s);
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Optimization

AscentResult gradient_ascent(const Vector& x0, const TargetModel& target, const AscentOptions& o) {
  if (!target.has_gradient()) throw Error("gradient_ascent: target has no gradient");
  AscentResult r;
  Vector x = x0;
  double f = target.log_density(x);
  if (f == kLogZero || !std::isfinite(f)) throw Error("gradient_ascent: start outside the support");
  Vector g = checked_gradient(target, x);
  double step = o.initial_step;
  const double eps = 10.0 * std::numeric_limits<double>::epsilon();
  for (r.iterations = 0; r.iterations < o.max_iterations; ++r.iterations) {
    const double gn = g.norm();
    if (gn < o.gradient_tolerance) {
      r.converged = true;
      break;
    }
    Vector x_new;
    Vector g_new;
    double f_new = kLogZero;
    bool moved = false;
    double a = step;
    for (int b = 0; b <= o.max_backtracks; ++b, a *= 0.5) {
      x_new = x + a * g;
      f_new = target.log_density(x_new);
      if (!std::isfinite(f_new)) continue;
      if (f_new >= f + o.armijo * a * gn * gn) {
        g_new = checked_gradient(target, x_new);
        moved = true;
        break;
      }
      // Near the optimum the Armijo gain drowns in rounding; accept steps that
      // keep f within rounding and shrink the gradient.
      if (f_new >= f - eps * (1.0 + std::abs(f))) {
        g_new = checked_gradient(target, x_new);
        if (g_new.norm() < gn) {
          moved = true;
          break;
        }
      }
    }
    if (!moved) break;
    const Vector s = x_new - x;
    const double sy = s.dot(g_new - g);
    step = sy < 0.0 ? s.squaredNorm() / -sy : 2.0 * a;
    step = std::clamp(step, 1e-12, 1e12);
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
  }
  r.mode = x;
  r.log_density = f;
  r.gradient_norm = g.norm();
  if (r.gradient_norm < o.gradient_tolerance) r.converged = true;
  return r;
}

std::string_view to_string(StationaryKind k) {
  switch (k) {
    case StationaryKind::maximum: return "maximum";
    case StationaryKind::minimum: return "minimum";
    case StationaryKind::saddle: return "saddle";
    case StationaryKind::degenerate: return "degenerate";
  }
  return "degenerate";
}

std::vector<StationaryPoint> find_stationary_points(const TargetModel& target,
                                                    const std::vector<Vector>& starts,
                                                    const StationaryOptions& o) {
  if (!target.has_gradient()) throw Error("find_stationary_points: target has no gradient");
  std::vector<StationaryPoint> found;
  for (const Vector& start : starts) {
    try {
      Vector x = start;
      Vector g = checked_gradient(target, x);
      bool converged = false;
      for (int it = 0; it < o.max_iterations; ++it) {
        const double gn = g.norm();
        if (gn < o.gradient_tolerance) {
          converged = true;
          break;
        }
        Matrix h = finite_difference_hessian(target, x);
        h = 0.5 * (h + h.transpose());
        const Vector delta = h.completeOrthogonalDecomposition().solve(-g);
        if (!delta.allFinite()) break;
        bool moved = false;
        for (double t = 1.0; t > 1e-10; t *= 0.5) {
          const Vector xn = x + t * delta;
          if (!std::isfinite(target.log_density(xn))) continue;
          const Vector gnew = checked_gradient(target, xn);
          if (gnew.norm() < (1.0 - 1e-4 * t) * gn) {
            x = xn;
            g = gnew;
            moved = true;
            break;
          }
        }
        if (!moved || x.norm() > o.escape_radius) break;
      }
      if (!converged || x.norm() > o.escape_radius) continue;
      bool duplicate = false;
      for (const auto& p : found)
        if ((p.x - x).norm() < o.merge_radius) duplicate = true;
      if (duplicate) continue;
      Matrix h = finite_difference_hessian(target, x);
      h = 0.5 * (h + h.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      StationaryPoint p;
      p.x = x;
      p.log_density = target.log_density(x);
      p.hessian_eigenvalues = es.eigenvalues();
      const double scale = std::max(1.0, p.hessian_eigenvalues.cwiseAbs().maxCoeff());
      const double tol = o.eigen_tolerance * scale;
      const bool all_neg = (p.hessian_eigenvalues.array() < -tol).all();
      const bool all_pos = (p.hessian_eigenvalues.array() > tol).all();
      const bool any_zero = (p.hessian_eigenvalues.array().abs() <= tol).any();
      p.kind = any_zero  ? StationaryKind::degenerate
               : all_neg ? StationaryKind::maximum
               : all_pos ? StationaryKind::minimum
                         : StationaryKind::saddle;
      found.push_back(std::move(p));
    } catch (const Error&) {
      // start ran into a singular region
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return lex_less(a.x, b.x); });
  return found;
}

// ---------------------------------------------------------------------------
// Mode atlas

std::string_view to_string(KernelFamily f) {
  return f == KernelFamily::gaussian ? "gaussian" : "student_t";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "student_t" || name == "student-t" || name == "t") return KernelFamily::student_t;
  throw Error("unknown kernel family '" + std::string(name) + "'");
}

ModeAtlas::ModeAtlas(std::vector<Vector> centers, std::vector<Matrix> covariances,
                     std::vector<double> weights, KernelFamily family, double dof)
    : centers_(std::move(centers)), weights_(std::move(weights)), family_(family), dof_(dof) {
  if (centers_.empty()) throw Error("ModeAtlas: no modes");
  if (covariances.size() != centers_.size() || weights_.size() != centers_.size())
    throw Error("ModeAtlas: centers, covariances and weights differ in length");
  if (family_ == KernelFamily::student_t && !(dof_ > 0.0)) throw Error("ModeAtlas: dof must be positive");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error("ModeAtlas: weights must be positive");
    total += w;
  }
  for (double& w : weights_) w /= total;
  const Eigen::Index d = centers_.front().size();
  covariances_.resize(centers_.size());
  cholesky_.resize(centers_.size());
  log_det_half_.resize(centers_.size());
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    if (centers_[i].size() != d || !centers_[i].allFinite()) throw Error("ModeAtlas: bad mode centre");
    set_covariance(i, std::move(covariances[i]));
  }
}

void ModeAtlas::set_covariance(std::size_t i, Matrix covariance) {
  const Eigen::Index d = centers_[i].size();
  if (covariance.rows() != d || covariance.cols() != d) throw Error("ModeAtlas: covariance has wrong shape");
  covariance = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw Error("ModeAtlas: covariance is not positive-definite");
  cholesky_[i] = llt.matrixL();
  log_det_half_[i] = cholesky_[i].diagonal().array().log().sum();
  covariances_[i] = std::move(covariance);
}

void ModeAtlas::set_family(KernelFamily family, double dof) {
  if (family == KernelFamily::student_t && !(dof > 0.0)) throw Error("ModeAtlas: dof must be positive");
  family_ = family;
  dof_ = dof;
}

double ModeAtlas::log_kernel(std::size_t i, const Vector& x) const {
  return log_elliptical_density(x, centers_[i], cholesky_[i], dof());
}

Vector ModeAtlas::whiten(std::size_t i, const Vector& x) const {
  return cholesky_[i].triangularView<Eigen::Lower>().solve(x - centers_[i]);
}

bool ModeAtlas::operator==(const ModeAtlas& o) const {
  return centers_ == o.centers_ && covariances_ == o.covariances_ && weights_ == o.weights_ &&
         family_ == o.family_ && dof() == o.dof();
}

std::string serialize_atlas(const ModeAtlas& atlas) {
  nlohmann::ordered_json j;
  j["dimension"] = atlas.dimension();
  j["family"] = std::string(to_string(atlas.family()));
  j["dof"] = atlas.dof();
  j["modes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    nlohmann::ordered_json m;
    m["weight"] = atlas.weight(i);
    m["center"] = std::vector<double>(atlas.center(i).data(), atlas.center(i).data() + atlas.dimension());
    std::vector<double> cov;
    for (Eigen::Index r = 0; r < atlas.dimension(); ++r)
      for (Eigen::Index c = 0; c < atlas.dimension(); ++c) cov.push_back(atlas.covariance(i)(r, c));
    m["covariance"] = cov;
    j["modes"].push_back(m);
  }
  return j.dump(2);
}

ModeAtlas parse_atlas(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto d = j.at("dimension").get<Eigen::Index>();
    const auto family = parse_kernel_family(j.at("family").get<std::string>());
    const double dof = j.value("dof", 7.0);
    std::vector<Vector> centers;
    std::vector<Matrix> covs;
    std::vector<double> weights;
    for (const auto& m : j.at("modes")) {
      const auto c = m.at("center").get<std::vector<double>>();
      const auto s = m.at("covariance").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(c.size()) != d || static_cast<Eigen::Index>(s.size()) != d * d)
        throw Error("atlas: mode size does not match dimension");
      centers.push_back(Eigen::Map<const Vector>(c.data(), d));
      covs.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(s.data(), d, d));
      weights.push_back(m.at("weight").get<double>());
    }
    return ModeAtlas(std::move(centers), std::move(covs), std::move(weights), family,
                     family == KernelFamily::gaussian ? 7.0 : dof);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("atlas: ") + e.what());
  }
}

ModeAtlas find_modes(const TargetModel& target, const std::vector<Vector>& starts,
                     const FindModesOptions& o) {
  if (starts.empty()) throw Error("find_modes: no starting points");
  struct Candidate {
    Vector x;
    double lp;
    Matrix cov;
    Matrix chol;
  };
  std::vector<Candidate> cands;
  for (const Vector& s : starts) {
    AscentResult r;
    try {
      r = gradient_ascent(s, target, o.ascent);
    } catch (const Error&) {
      continue;
    }
    if (!r.converged) continue;
    Matrix h = finite_difference_hessian(target, r.mode);
    h = 0.5 * (h + h.transpose());
    Eigen::LLT<Matrix> neg(-h);
    if (neg.info() != Eigen::Success) continue;  // saddle or flat
    const Matrix cov = neg.solve(Matrix::Identity(h.rows(), h.cols()));
    Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
    if (llt.info() != Eigen::Success) continue;
    cands.push_back({r.mode, r.log_density, 0.5 * (cov + cov.transpose()), llt.matrixL()});
  }
  if (cands.empty()) throw Error("find_modes: no start converged to a local maximum");
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.lp != b.lp) return a.lp > b.lp;
    return lex_less(a.x, b.x);
  });
  const double radius =
      o.dedup_radius >= 0.0 ? o.dedup_radius : 1e-3 * std::sqrt(static_cast<double>(target.dimension()));
  std::vector<Candidate> kept;
  for (auto& c : cands) {
    bool dup = false;
    for (const auto& k : kept)
      if (k.chol.triangularView<Eigen::Lower>().solve(c.x - k.x).norm() < radius) dup = true;
    if (!dup) kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) { return lex_less(a.x, b.x); });
  std::vector<Vector> centers;
  std::vector<Matrix> covs;
  for (auto& k : kept) {
    centers.push_back(std::move(k.x));
    covs.push_back(std::move(k.cov));
  }
  std::vector<double> w(centers.size(), 1.0 / static_cast<double>(centers.size()));
  return ModeAtlas(std::move(centers), std::move(covs), std::move(w), o.family, o.dof);
}

// ---------------------------------------------------------------------------
// JAMS

double jams_augmented_logdensity(double log_pi, const Vector& x, std::size_t i, const ModeAtlas& atlas) {
  if (i >= atlas.size()) throw Error("jams: mode index out of range");
  if (!x.allFinite() || std::isnan(log_pi)) throw NumericalError("jams: non-finite input");
  if (log_pi == kLogZero) return kLogZero;
  if (atlas.size() == 1) return log_pi;
  std::vector<double> terms(atlas.size());
  for (std::size_t j = 0; j < atlas.size(); ++j) terms[j] = std::log(atlas.weight(j)) + atlas.log_kernel(j, x);
  const double denom = lse(terms);
  if (denom == kLogZero) {
    // every kernel underflows: fall back on the whitened distances
    std::vector<double> alt(atlas.size());
    for (std::size_t j = 0; j < atlas.size(); ++j)
      alt[j] = std::log(atlas.weight(j)) - atlas.log_det_half(j) - 0.5 * atlas.whiten(j, x).squaredNorm();
    return log_pi + alt[i] - lse(alt);
  }
  return log_pi + terms[i] - denom;
}

double jams_augmented_logdensity(const Vector& x, std::size_t i, const ModeAtlas& atlas,
                                 const TargetModel& target) {
  return jams_augmented_logdensity(target.log_density(x), x, i, atlas);
}

JamsState make_jams_state(const Vector& x, std::size_t mode, const ModeAtlas& atlas,
                          const TargetModel& target) {
  JamsState s;
  s.x = x;
  s.mode = mode;
  s.log_pi = target.log_density(x);
  if (s.log_pi == kLogZero) throw Error("jams: initial state outside the support");
  s.log_augmented = jams_augmented_logdensity(s.log_pi, x, mode, atlas);
  return s;
}

namespace {

bool accept_log_ratio(double log_r, RngStream& rng) {
  if (std::isnan(log_r)) throw NumericalError("jams: NaN acceptance ratio");
  return log_r >= 0.0 || rng.uniform() < std::exp(log_r);
}

Vector sample_kernel(const ModeAtlas& atlas, std::size_t i, RngStream& rng) {
  Vector z(atlas.dimension());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
  if (atlas.dof() > 0.0) z *= std::sqrt(atlas.dof() / rng.chi_squared(atlas.dof()));
  return atlas.center(i) + atlas.cholesky(i) * z;
}

}  // namespace

bool jams_local_step(JamsState& s, const ModeAtlas& atlas, const TargetModel& target,
                     AdaptiveRwmState& a, RngStream& rng) {
  ++s.iteration;
  Vector y = rwm_propose(s.x, a, rng);
  const double lp = target.log_density(y);
  if (std::isnan(lp)) throw NumericalError("jams: NaN log-density at proposal");
  bool accepted = false;
  if (lp != kLogZero) {
    const double la = jams_augmented_logdensity(lp, y, s.mode, atlas);
    if (accept_log_ratio(la - s.log_augmented, rng)) {
      s.x = std::move(y);
      s.log_pi = lp;
      s.log_augmented = la;
      accepted = true;
    }
  }
  a.record(accepted);
  rwm_adapt(a, accepted, s.x);
  return accepted;
}

bool jams_jump_step(JamsState& s, const ModeAtlas& atlas, const TargetModel& target, RngStream& rng,
                    JumpMove move) {
  const std::size_t k = atlas.size();
  if (k < 2) throw Error("jams_jump_step: needs at least two modes");
  ++s.iteration;
  std::size_t j = rng.index(k - 1);
  if (j >= s.mode) ++j;
  Vector y;
  double log_q = 0.0;
  if (move == JumpMove::affine) {
    y = atlas.center(j) + atlas.cholesky(j) * atlas.whiten(s.mode, s.x);
    log_q = atlas.log_det_half(j) - atlas.log_det_half(s.mode);
  } else {
    y = sample_kernel(atlas, j, rng);
    log_q = atlas.log_kernel(s.mode, s.x) - atlas.log_kernel(j, y);
  }
  const double lp = target.log_density(y);
  if (std::isnan(lp)) throw NumericalError("jams: NaN log-density at proposal");
  if (lp == kLogZero) return false;
  const double la = jams_augmented_logdensity(lp, y, j, atlas);
  if (!accept_log_ratio(la - s.log_augmented + log_q, rng)) return false;
  s.x = std::move(y);
  s.mode = j;
  s.log_pi = lp;
  s.log_augmented = la;
  return true;
}

ExactKernelMatrix jams_exact_local_matrix(const std::vector<double>& log_pi, const ModeAtlas& atlas,
                                          std::size_t mode, const Matrix& proposal) {
  if (atlas.dimension() != 1) throw Error("jams_exact_local_matrix: atlas must be one-dimensional");
  std::vector<double> aug(log_pi.size());
  for (std::size_t k = 0; k < log_pi.size(); ++k)
    aug[k] = jams_augmented_logdensity(log_pi[k], Vector::Constant(1, static_cast<double>(k)), mode, atlas);
  return build_transition_matrix(aug, proposal);
}

JamsResult jams_run(const TargetModel& target, const std::vector<Vector>& starts, const JamsConfig& cfg,
                    std::uint64_t seed) {
  const ModeAtlas found = find_modes(target, starts, cfg.modes);
  JamsResult r = jams_run(target, found, cfg, seed);
  r.atlas_history.insert(r.atlas_history.begin(), found);
  return r;
}

JamsResult jams_run(const TargetModel& target, const ModeAtlas& initial, const JamsConfig& cfg,
                    std::uint64_t seed) {
  if (target.space() != StateSpace::continuous) throw Error("jams: continuous targets only");
  if (initial.dimension() != target.dimension()) throw Error("jams: atlas dimension mismatch");
  if (!(cfg.jump_probability >= 0.0 && cfg.jump_probability <= 1.0))
    throw Error("jams: jump probability must lie in [0, 1]");
  const std::size_t k = initial.size();
  const Eigen::Index d = target.dimension();
  const RngStream root(seed, 0);
  ModeAtlas atlas = initial;

  // Phase 2: per-mode chains on pi(x | i) estimate the conditional covariances.
  std::vector<AdaptiveRwmState> rwm;
  for (std::size_t i = 0; i < k; ++i) {
    rwm.emplace_back(d, cfg.rwm);
    rwm.back().set_covariance(atlas.covariance(i));
  }
  std::vector<Matrix> refined(k);
  parallel_for(k, [&](std::size_t i) {
    if (cfg.refine_iterations == 0) return;
    RngStream rng = root.split(1000 + i);
    JamsState s = make_jams_state(atlas.center(i), i, atlas, target);
    const std::size_t keep_from = cfg.refine_iterations / 2;
    Vector mean = Vector::Zero(d);
    Matrix scatter = Matrix::Zero(d, d);
    double n = 0.0;
    for (std::size_t t = 0; t < cfg.refine_iterations; ++t) {
      jams_local_step(s, atlas, target, rwm[i], rng);
      if (t < keep_from) continue;
      n += 1.0;
      const Vector delta = s.x - mean;
      mean += delta / n;
      scatter.noalias() += delta * (s.x - mean).transpose();
    }
    if (n > static_cast<double>(d) + 1.0) refined[i] = scatter / (n - 1.0);
  }, cfg.threads);
  for (std::size_t i = 0; i < k; ++i) {
    if (refined[i].size() == 0) continue;
    Matrix c = refined[i];
    c.diagonal().array() += cfg.covariance_jitter;
    try {
      atlas.set_covariance(i, c);
    } catch (const Error&) {
      // keep the Hessian-based covariance when the sample estimate is singular
    }
  }
  for (auto& a : rwm) a.reset_acceptance();

  JamsResult r;
  r.atlas_history.push_back(atlas);
  r.trace = Trace(d, target.space());
  r.trace.reserve(cfg.iterations + 1);
  const std::uint16_t local_tag = r.trace.intern_tag("local");
  const std::uint16_t jump_tag = r.trace.intern_tag("jump");
  RngStream rng = root.split(0);
  JamsState s = make_jams_state(atlas.center(0), 0, atlas, target);
  r.trace.push_initial(s.x);
  std::size_t jump_acc = 0;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    try {
      const bool jump = k >= 2 && rng.uniform() < cfg.jump_probability;
      bool acc;
      if (jump) {
        acc = jams_jump_step(s, atlas, target, rng, cfg.jump);
        ++r.jump_attempts;
        jump_acc += acc ? 1 : 0;
      } else {
        acc = jams_local_step(s, atlas, target, rwm[s.mode], rng);
      }
      r.trace.push(s.x, StepMeta{acc, jump ? jump_tag : local_tag, static_cast<std::int32_t>(s.mode)});
    } catch (const NumericalError& e) {
      r.trace.mark_failed("iteration " + std::to_string(t + 1) + ": " + e.what());
      break;
    }
  }
  for (const auto& a : rwm) r.local_acceptance.push_back(a.acceptance_rate());
  r.jump_acceptance = r.jump_attempts == 0 ? 0.0 : static_cast<double>(jump_acc) / static_cast<double>(r.jump_attempts);
  r.atlas = std::move(atlas);
  return r;
}

// ---------------------------------------------------------------------------
// RAM

Vector ram_draw(const Vector& x, const TargetModel& target, const RamConfig& cfg, RngStream& rng) {
  if (!(cfg.scale > 0.0)) throw Error("ram: scale must be positive");
  switch (target.space()) {
    case StateSpace::continuous: {
      Vector y = x;
      for (Eigen::Index k = 0; k < y.size(); ++k) y[k] += cfg.scale * rng.normal();
      return y;
    }
    case StateSpace::tabular: {
      const auto s = static_cast<std::size_t>(std::max(1L, std::lround(cfg.scale)));
      const auto u = static_cast<long>(rng.index(2 * s));
      const long step = u < static_cast<long>(s) ? u - static_cast<long>(s) : u - static_cast<long>(s) + 1;
      return Vector::Constant(1, x[0] + static_cast<double>(step));
    }
    case StateSpace::binary_lattice:
      break;
  }
  throw Error("ram: binary lattice targets are not supported");
}

namespace {

double checked_log_density(const TargetModel& target, const Vector& x) {
  const double v = target.log_density(x);
  if (std::isnan(v)) throw NumericalError("ram: NaN log-density");
  return v;
}

// log min{1, pi(u) / pi(v)} with pi(v) = 0 giving 0.
double log_down(double lu, double lv) { return lv == kLogZero ? 0.0 : std::min(0.0, lu - lv); }

// Forced downhill draw from u; false when the budget runs out.
bool forced_down(const Vector& u, double lu, const TargetModel& target, const RamConfig& cfg,
                 RngStream& rng, Vector& out, double& lout, int& draws) {
  for (int t = 0; t < cfg.max_inner; ++t) {
    ++draws;
    Vector v = ram_draw(u, target, cfg, rng);
    const double lv = checked_log_density(target, v);
    const double la = log_down(lu, lv);
    if (la >= 0.0 || rng.uniform() < std::exp(la)) {
      out = std::move(v);
      lout = lv;
      return true;
    }
  }
  return false;
}

}  // namespace

RamProposal ram_propose(const Vector& x, double log_pi_x, const TargetModel& target, const RamConfig& cfg,
                        RngStream& rng) {
  if (cfg.max_inner < 1) throw Error("ram: max_inner must be positive");
  RamProposal p;
  if (!forced_down(x, log_pi_x, target, cfg, rng, p.z, p.log_pi_z, p.down_draws)) return p;
  for (int t = 0; t < cfg.max_inner; ++t) {
    ++p.up_draws;
    Vector y = ram_draw(p.z, target, cfg, rng);
    const double ly = checked_log_density(target, y);
    if (ly == kLogZero) continue;
    const double la = p.log_pi_z == kLogZero ? 0.0 : std::min(0.0, ly - p.log_pi_z);
    if (la >= 0.0 || rng.uniform() < std::exp(la)) {
      p.y = std::move(y);
      p.log_pi_y = ly;
      p.ok = true;
      return p;
    }
  }
  return p;
}

RamStepInfo ram_step(ChainState& state, const TargetModel& target, const RamConfig& cfg, RngStream& rng) {
  RamStepInfo info;
  ++state.iteration;
  const Vector z = ram_draw(state.position, target, cfg, rng);
  const double lz = checked_log_density(target, z);
  const RamProposal p = ram_propose(state.position, state.log_density, target, cfg, rng);
  if (!p.ok) {
    info.budget_exhausted = true;
    return info;
  }
  Vector z_new;
  double lz_new = kLogZero;
  int draws = 0;
  if (!forced_down(p.y, p.log_pi_y, target, cfg, rng, z_new, lz_new, draws)) {
    info.budget_exhausted = true;
    return info;
  }
  const double log_r = p.log_pi_y - state.log_density + log_down(state.log_density, lz) -
                       log_down(p.log_pi_y, lz_new);
  if (std::isnan(log_r)) throw NumericalError("ram: NaN acceptance ratio");
  if (log_r >= 0.0 || rng.uniform() < std::exp(log_r)) {
    state.position = p.y;
    state.log_density = p.log_pi_y;
    info.accepted = true;
  }
  return info;
}

StepInfo RamKernel::step(ChainState& state, const TargetModel& target, RngStream& rng) {
  const RamStepInfo r = ram_step(state, target, cfg_, rng);
  if (r.budget_exhausted) ++failures_;
  return {r.accepted, std::nullopt};
}

}  // namespace mmcmc
