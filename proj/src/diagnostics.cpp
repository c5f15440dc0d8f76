#include "mmcmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "mmcmc/error.hpp"

namespace mmcmc {

namespace {

/// Orthonormal basis (n x n-1) of the complement of v.
Matrix complement_basis(const Vector& v) {
  Eigen::HouseholderQR<Matrix> qr(v);
  const Matrix q = qr.householderQ() * Matrix::Identity(v.size(), v.size());
  return q.rightCols(v.size() - 1);
}

}  // namespace

ExactKernelMatrix::ExactKernelMatrix(Matrix p, std::vector<double> stationary)
    : p_(std::move(p)), pi_(std::move(stationary)) {
  const auto n = static_cast<std::size_t>(p_.rows());
  if (p_.rows() != p_.cols() || n == 0) throw Error("ExactKernelMatrix: matrix must be square");
  if (pi_.size() != n) throw Error("ExactKernelMatrix: stationary vector has wrong length");
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    if ((p_.row(i).array() < -1e-15).any()) throw Error("ExactKernelMatrix: negative entry");
    if (std::abs(p_.row(i).sum() - 1.0) > 1e-12)
      throw Error("ExactKernelMatrix: row " + std::to_string(i) + " does not sum to 1");
  }
  double total = 0.0;
  for (double v : pi_) {
    if (!(v >= 0.0)) throw Error("ExactKernelMatrix: negative stationary mass");
    total += v;
  }
  for (double& v : pi_) v /= total;
  reversible_ = detailed_balance_residual() <= 1e-10;
}

double ExactKernelMatrix::detailed_balance_residual() const {
  double worst = 0.0;
  for (Eigen::Index x = 0; x < p_.rows(); ++x)
    for (Eigen::Index y = x + 1; y < p_.cols(); ++y)
      worst = std::max(worst, std::abs(pi_[x] * p_(x, y) - pi_[y] * p_(y, x)));
  return worst;
}

double ExactKernelMatrix::stationarity_residual() const {
  const Eigen::Map<const Vector> pi(pi_.data(), static_cast<Eigen::Index>(pi_.size()));
  return (p_.transpose() * pi - pi).cwiseAbs().maxCoeff();
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_weights) {
  double m = kLogZero;
  for (double v : log_weights) m = std::max(m, v);
  if (!std::isfinite(m)) throw Error("normalize_log_weights: no finite weight");
  std::vector<double> out(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) total += out[i] = std::exp(log_weights[i] - m);
  for (double& v : out) v /= total;
  return out;
}

ExactKernelMatrix build_transition_matrix(const std::vector<double>& log_target,
                                          const Matrix& proposal) {
  const auto n = static_cast<Eigen::Index>(log_target.size());
  if (n == 0 || n > 4096) throw Error("build_transition_matrix: state space must have 1..4096 states");
  if (proposal.rows() != n || proposal.cols() != n)
    throw Error("build_transition_matrix: proposal shape mismatch");
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    if (log_target[x] == kLogZero) throw Error("build_transition_matrix: state outside support");
    double off = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (y == x || proposal(x, y) <= 0.0) continue;
      double a = 0.0;
      if (proposal(y, x) > 0.0) {
        const double log_r = log_target[y] - log_target[x] + std::log(proposal(y, x)) -
                             std::log(proposal(x, y));
        a = log_r >= 0.0 ? 1.0 : std::exp(log_r);
      }
      p(x, y) = proposal(x, y) * a;
      off += p(x, y);
    }
    p(x, x) = 1.0 - off;
  }
  return ExactKernelMatrix(std::move(p), normalize_log_weights(log_target));
}

SpectralReport spectral_gap(const ExactKernelMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  SpectralReport r;
  if (n == 1) {
    r.right_gap = r.absolute_gap = 1.0;
    return r;
  }
  const Eigen::Map<const Vector> pi(m.stationary().data(), n);
  if (m.reversible() && (pi.array() > 0.0).all()) {
    const Vector s = pi.array().sqrt();
    Matrix sym = s.asDiagonal() * m.matrix() * s.cwiseInverse().asDiagonal();
    sym = 0.5 * (sym + sym.transpose()).eval();
    const Matrix u = complement_basis(s);
    Eigen::SelfAdjointEigenSolver<Matrix> es(u.transpose() * sym * u, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("spectral_gap: eigensolver failed");
    double top = -std::numeric_limits<double>::infinity();
    double modulus = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double l = es.eigenvalues()[i];
      r.eigenvalues_re.push_back(l);
      r.eigenvalues_im.push_back(0.0);
      top = std::max(top, l);
      modulus = std::max(modulus, std::abs(l));
    }
    r.right_gap = 1.0 - top;
    r.absolute_gap = 1.0 - modulus;
    return r;
  }
  const Matrix b = complement_basis(pi);
  Eigen::EigenSolver<Matrix> es(b.transpose() * m.matrix() * b, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_gap: eigensolver failed");
  double top = -std::numeric_limits<double>::infinity();
  double modulus = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto l = es.eigenvalues()[i];
    r.eigenvalues_re.push_back(l.real());
    r.eigenvalues_im.push_back(l.imag());
    top = std::max(top, l.real());
    modulus = std::max(modulus, std::abs(l));
  }
  r.right_gap = 1.0 - top;
  r.absolute_gap = 1.0 - modulus;
  return r;
}

ConductanceReport conductance(const ExactKernelMatrix& m) {
  const std::size_t n = m.size();
  if (n > 16)
    throw Error("conductance: exact enumeration supports n <= 16; use a sampled-cut estimate");
  if (n < 2) throw Error("conductance: need at least two states");
  const Matrix& p = m.matrix();
  const auto& pi = m.stationary();
  ConductanceReport r;
  r.kappa = std::numeric_limits<double>::infinity();
  std::uint32_t best = 0;
  const std::uint32_t full = (1u << n) - 1u;
  for (std::uint32_t set = 1; set < full; ++set) {
    double mass = 0.0;
    for (std::size_t x = 0; x < n; ++x)
      if (set >> x & 1u) mass += pi[x];
    if (mass <= 0.0 || mass >= 1.0) continue;
    if (m.reversible() && mass > 0.5 + 1e-15) continue;
    double flow = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      if (!(set >> x & 1u)) continue;
      for (std::size_t y = 0; y < n; ++y)
        if (!(set >> y & 1u)) flow += pi[x] * p(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
    const double k = flow / (mass * (1.0 - mass));
    if (k < r.kappa) {
      r.kappa = k;
      best = set;
    }
  }
  for (std::size_t x = 0; x < n; ++x)
    if (best >> x & 1u) r.argmin.push_back(x);
  return r;
}

CheegerReport cheeger_check(const ExactKernelMatrix& m, double slack) {
  const double kappa = conductance(m).kappa;
  CheegerReport r;
  r.lower_bound = kappa * kappa / 8.0;
  r.upper_bound = kappa;
  r.gap = spectral_gap(m).right_gap;
  r.lower_margin = r.gap - r.lower_bound;
  r.upper_margin = r.upper_bound - r.gap;
  r.holds = r.lower_margin >= -slack && r.upper_margin >= -slack;
  return r;
}

ExactKernelMatrix independence_sampler_matrix(const std::vector<double>& pi,
                                              const std::vector<double>& q) {
  if (pi.size() != q.size()) throw Error("independence_sampler_matrix: size mismatch");
  const auto n = static_cast<Eigen::Index>(pi.size());
  std::vector<double> log_pi(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] > 0.0 && !(q[i] > 0.0))
      throw Error("independence sampler: proposal is zero at state " + std::to_string(i));
    log_pi[i] = std::log(pi[i]);
  }
  Matrix proposal(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y) proposal(x, y) = q[y];
  return build_transition_matrix(log_pi, proposal);
}

JumpGapReport jump_gap_check(const std::vector<double>& pi, const std::vector<double>& q,
                             double tol) {
  JumpGapReport r;
  const ExactKernelMatrix m = independence_sampler_matrix(pi, q);
  for (std::size_t i = 0; i < pi.size(); ++i) r.w_star = std::max(r.w_star, pi[i] / q[i]);
  r.predicted_gap = 1.0 / r.w_star;
  r.exact_gap = spectral_gap(m).absolute_gap;
  r.match = std::abs(r.exact_gap - r.predicted_gap) <= tol;
  return r;
}

double inhomogeneity_factor(const Matrix& sigma_target, const Matrix& sigma_proposal) {
  const auto d = sigma_target.rows();
  if (sigma_target.cols() != d || sigma_proposal.rows() != d || sigma_proposal.cols() != d)
    throw Error("inhomogeneity_factor: dimension mismatch");
  if ((sigma_target - sigma_target.transpose()).cwiseAbs().maxCoeff() >
          1e-10 * (1.0 + sigma_target.cwiseAbs().maxCoeff()) ||
      (sigma_proposal - sigma_proposal.transpose()).cwiseAbs().maxCoeff() >
          1e-10 * (1.0 + sigma_proposal.cwiseAbs().maxCoeff()))
    throw Error("inhomogeneity_factor: matrices must be symmetric");
  if (Eigen::LLT<Matrix>(sigma_target).info() != Eigen::Success)
    throw Error("inhomogeneity_factor: target covariance is not positive-definite");
  // Eigenvalues of Sigma_target^-1 Sigma_proposal solve Sigma_proposal v = l Sigma_target v.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sigma_proposal, sigma_target,
                                                      Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("inhomogeneity_factor: eigensolver failed");
  double inv = 0.0;
  double inv_sqrt = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double l = es.eigenvalues()[i];
    if (!(l > 0.0)) throw Error("inhomogeneity_factor: proposal covariance is not positive-definite");
    inv += 1.0 / l;
    inv_sqrt += 1.0 / std::sqrt(l);
  }
  return static_cast<double>(d) * inv / (inv_sqrt * inv_sqrt);
}

double rmse_over_sqrt_d(const Trace& trace, const Vector& true_mean, std::size_t first) {
  const Vector mean = ergodic_mean(trace, first);
  if (mean.size() != true_mean.size()) throw Error("rmse_over_sqrt_d: dimension mismatch");
  return (mean - true_mean).norm() / std::sqrt(static_cast<double>(mean.size()));
}

double round_trip_rate(const ReplicaIndexTrace& trace, int levels) {
  if (levels < 2 || trace.size() < 2) return 0.0;
  // phase: 0 = not yet at the top, 1 = left the top, 2 = reached the bottom.
  std::vector<int> phase(static_cast<std::size_t>(levels) + 1, 0);
  long trips = 0;
  for (const auto& row : trace) {
    if (static_cast<int>(row.size()) != levels)
      throw Error("round_trip_rate: row has wrong number of levels");
    for (int level = 1; level <= levels; ++level) {
      const int label = row[static_cast<std::size_t>(level - 1)];
      if (label < 1 || label > levels) throw Error("round_trip_rate: label out of range");
      int& ph = phase[static_cast<std::size_t>(label)];
      if (level == levels) {
        if (ph == 2) ++trips;
        ph = 1;
      } else if (level == 1 && ph == 1) {
        ph = 2;
      }
    }
  }
  const double sweeps = static_cast<double>(trace.size() - 1);
  return static_cast<double>(trips) / (static_cast<double>(levels) * sweeps);
}

double tv_distance(const std::vector<double>& empirical, const std::vector<double>& exact) {
  if (empirical.size() != exact.size()) throw Error("tv_distance: support mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) s += std::abs(empirical[i] - exact[i]);
  return 0.5 * s;
}

std::vector<double> empirical_distribution(const Trace& trace, std::size_t n, std::size_t first) {
  std::vector<double> h(n, 0.0);
  if (trace.size() <= first) throw Error("empirical_distribution: empty trace");
  for (std::size_t t = first; t < trace.size(); ++t) {
    const double v = trace.state(t)[0];
    if (v < 0.0 || v >= static_cast<double>(n)) throw Error("empirical_distribution: state out of range");
    h[static_cast<std::size_t>(v)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(trace.size() - first);
  return h;
}

std::string diagnostics_json(const std::vector<std::pair<std::string, double>>& fields) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : fields) {
    if (std::isfinite(v))
      j[k] = v;
    else
      j[k] = nullptr;
  }
  return j.dump(2);
}

}  // namespace mmcmc
