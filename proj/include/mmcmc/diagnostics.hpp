#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmcmc/chain.hpp"

namespace mmcmc {

/// Exact transition matrix of a kernel on a finite state space.
class ExactKernelMatrix {
 public:
  /// Rows must sum to 1 within 1e-12; `stationary` is normalized.
  ExactKernelMatrix(Matrix p, std::vector<double> stationary);

  std::size_t size() const { return static_cast<std::size_t>(p_.rows()); }
  const Matrix& matrix() const { return p_; }
  const std::vector<double>& stationary() const { return pi_; }
  bool reversible() const { return reversible_; }

  /// max_x,y |pi(x) P(x,y) - pi(y) P(y,x)|.
  double detailed_balance_residual() const;
  /// max_y |(pi P)(y) - pi(y)|.
  double stationarity_residual() const;

 private:
  Matrix p_;
  std::vector<double> pi_;
  bool reversible_ = false;
};

/// Metropolis-Hastings matrix from a target (log-weights, any constant) and a
/// row-stochastic proposal matrix: P(x,y) = Q(x,y) min{1, pi(y)Q(y,x) / pi(x)Q(x,y)}
/// off the diagonal, rejections on the diagonal.
ExactKernelMatrix build_transition_matrix(const std::vector<double>& log_target,
                                          const Matrix& proposal);

/// Normalized exp(log_weights).
std::vector<double> normalize_log_weights(const std::vector<double>& log_weights);

struct SpectralReport {
  double right_gap = 0.0;     // 1 - max Re(lambda) on the zero-mean subspace
  double absolute_gap = 0.0;  // 1 - max |lambda|
  std::vector<double> eigenvalues_re;
  std::vector<double> eigenvalues_im;
};

/// Spectrum of P restricted to functions with pi-mean zero.
SpectralReport spectral_gap(const ExactKernelMatrix& m);

struct ConductanceReport {
  double kappa = 0.0;
  std::vector<std::size_t> argmin;  // states in the minimizing set A
  bool exact = true;
};

/// Minimum of sum_{x in A} pi(x)P(x,A^c) / (pi(A) pi(A^c)) over cuts. For
/// reversible matrices only sets with pi(A) <= 1/2 are considered. n <= 16.
ConductanceReport conductance(const ExactKernelMatrix& m);

struct CheegerReport {
  bool holds = false;
  double lower_bound = 0.0;  // kappa^2 / 8
  double gap = 0.0;          // 1 - lambda_2
  double upper_bound = 0.0;  // kappa
  double lower_margin = 0.0;
  double upper_margin = 0.0;
};

/// kappa^2/8 <= 1 - lambda_2 <= kappa with slack 1e-9.
CheegerReport cheeger_check(const ExactKernelMatrix& m, double slack = 1e-9);

struct JumpGapReport {
  double w_star = 0.0;
  double predicted_gap = 0.0;  // 1 / w*
  double exact_gap = 0.0;
  bool match = false;
};

/// Metropolized independence sampler matrix for target pi and proposal q.
ExactKernelMatrix independence_sampler_matrix(const std::vector<double>& pi,
                                              const std::vector<double>& q);
JumpGapReport jump_gap_check(const std::vector<double>& pi, const std::vector<double>& q,
                             double tol = 1e-8);

/// b = d sum(l^-1) / (sum(l^-1/2))^2 over eigenvalues l of
/// Sigma_target^-1 Sigma_proposal.
double inhomogeneity_factor(const Matrix& sigma_target, const Matrix& sigma_proposal);

/// ||ergodic mean - true mean|| / sqrt(d).
double rmse_over_sqrt_d(const Trace& trace, const Vector& true_mean, std::size_t first = 0);

/// Labels of the replicas occupying levels 1..L after each sweep.
using ReplicaIndexTrace = std::vector<std::vector<int>>;

/// Completed L -> 1 -> L round trips per replica per sweep. Row 0 is the
/// initial assignment.
double round_trip_rate(const ReplicaIndexTrace& trace, int levels);

/// 1/2 sum |a_i - b_i|. Throws on support mismatch.
double tv_distance(const std::vector<double>& empirical, const std::vector<double>& exact);

/// Normalized histogram of the integer-valued first coordinate over n states.
std::vector<double> empirical_distribution(const Trace& trace, std::size_t n,
                                           std::size_t first = 0);

/// Flat named-value JSON object, keys in insertion order.
std::string diagnostics_json(const std::vector<std::pair<std::string, double>>& fields);

}  // namespace mmcmc
