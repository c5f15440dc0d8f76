#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mmcmc/target.hpp"

namespace mmcmc {

// ---------------------------------------------------------------------------
// Two-component Gaussian mixture with isotropic components and weights 1/2.

struct GaussianMixtureParams {
  Vector mean1;
  Vector mean2;
  double var1 = 1.0;
  double var2 = 1.0;

  /// Benchmark mixture in dimension d: means -1 and +1, variances
  /// 0.5 sqrt(d/100) and sqrt(d/100).
  static GaussianMixtureParams benchmark(Eigen::Index d);
  Eigen::Index dimension() const { return mean1.size(); }
  void validate() const;
};

double mixture_log_density(const Vector& x, const GaussianMixtureParams& p);
Vector mixture_gradient(const Vector& x, const GaussianMixtureParams& p);

class GaussianMixtureTarget final : public TargetModel {
 public:
  explicit GaussianMixtureTarget(GaussianMixtureParams params);

  Eigen::Index dimension() const override { return params_.dimension(); }
  StateSpace space() const override { return StateSpace::continuous; }
  double log_density(const Vector& x) const override { return mixture_log_density(x, params_); }
  bool has_gradient() const override { return true; }
  Vector gradient(const Vector& x) const override { return mixture_gradient(x, params_); }

  const GaussianMixtureParams& params() const { return params_; }
  /// E[x] under the mixture.
  Vector mean() const { return 0.5 * (params_.mean1 + params_.mean2); }

 private:
  GaussianMixtureParams params_;
};

// ---------------------------------------------------------------------------
// Autologistic (Ising) model on an H x W lattice with 8-neighbourhood.

/// Unordered 8-neighbour pairs (i < j) of an H x W row-major lattice. No wrap.
std::vector<std::pair<int, int>> lattice_pairs_8(int height, int width);

struct AutologisticParams {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> observed;  // y, row-major
  double alpha = 1.0;
  double beta = 0.7;
  std::vector<std::pair<int, int>> adjacency;

  static AutologisticParams make(int height, int width, std::vector<std::uint8_t> observed,
                                 double alpha, double beta);
  int sites() const { return height * width; }
};

struct SufficientStats {
  long agree_with_observed = 0;  // s1
  long agree_neighbours = 0;     // s2
};

SufficientStats autologistic_suff_stats(const Vector& x, const AutologisticParams& p);
/// alpha s1 + beta s2 (normalizing constant omitted).
double autologistic_log_density_unnorm(const Vector& x, const AutologisticParams& p);
/// P(x_i = 1 | x_-i).
double autologistic_site_conditional(const Vector& x, int site, const AutologisticParams& p);

class AutologisticTarget final : public TargetModel {
 public:
  explicit AutologisticTarget(AutologisticParams params);

  Eigen::Index dimension() const override { return params_.sites(); }
  StateSpace space() const override { return StateSpace::binary_lattice; }
  double log_density(const Vector& x) const override;
  double flip_delta(const Vector& x, Eigen::Index site) const override;

  double site_conditional(const Vector& x, int site) const;
  const AutologisticParams& params() const { return params_; }
  const std::vector<int>& neighbours(int site) const { return neighbours_[site]; }

  /// Binary state for enumeration index `code` (bit i is x_i).
  Vector decode(std::uint64_t code) const;
  std::uint64_t encode(const Vector& x) const;
  /// Brute-force normalized probabilities over all 2^d states; d <= 20.
  std::vector<double> enumerate_probabilities() const;

 private:
  AutologisticParams params_;
  std::vector<std::vector<int>> neighbours_;
};

// ---------------------------------------------------------------------------
// Finite state space with explicit probabilities.

class TabularTarget final : public TargetModel {
 public:
  /// Probabilities must be positive and sum to 1 within 1e-12.
  explicit TabularTarget(std::vector<double> probabilities,
                         std::vector<std::vector<int>> adjacency = {});
  /// Normalizes exp(log_weights).
  static TabularTarget from_log_weights(const std::vector<double>& log_weights,
                                        std::vector<std::vector<int>> adjacency = {});

  Eigen::Index dimension() const override { return 1; }
  StateSpace space() const override { return StateSpace::tabular; }
  double log_density(const Vector& x) const override;
  std::optional<std::vector<double>> exact_table() const override { return probs_; }

  std::size_t size() const { return probs_.size(); }
  double probability(std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probabilities() const { return probs_; }
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }
  double mean_index() const;

  static Vector state(std::size_t index) { return Vector::Constant(1, static_cast<double>(index)); }

 private:
  std::vector<double> probs_;
  std::vector<double> log_probs_;
  std::vector<std::vector<int>> adjacency_;
};

// ---------------------------------------------------------------------------
// Bivariate seemingly unrelated regression: y_m = X_m b_m + e_m, m = 1, 2.

struct SurData {
  Vector y1;
  Vector y2;
  Matrix x1;  // n x J
  Matrix x2;  // n x J

  Eigen::Index n() const { return y1.size(); }
  Eigen::Index coefficients_per_equation() const { return x1.cols(); }
  void validate() const;
  /// Same system with the two equations relabelled.
  SurData swapped() const;
  /// Synthetic single-covariate dataset whose profile likelihood has two
  /// local maxima of comparable mass (n = 9).
  static SurData bimodal_example();
};

/// Residual matrix [r1 r2] (n x 2) at stacked coefficients beta = (b1, b2).
Matrix sur_residuals(const Vector& beta, const SurData& data);
/// Maximum-likelihood residual covariance n^-1 R'R.
Matrix sur_residual_covariance(const Vector& beta, const SurData& data);
/// -n log(2 pi) - (n/2) log|Sigma(beta)| - n. Throws on singular Sigma.
double sur_profile_loglik(const Vector& beta, const SurData& data);
Vector sur_profile_gradient(const Vector& beta, const SurData& data);

struct IglsResult {
  Vector beta;
  Matrix sigma;
  int iterations = 0;
  bool converged = false;
  /// beta after the first GLS update (Sigma = I).
  Vector first_update;
};

/// Zellner's iterated feasible GLS starting from Sigma = I. Exhausting
/// max_iter is reported through `converged`, not thrown.
IglsResult zellner_igls(const SurData& data, double tol = 1e-10, int max_iter = 1000);

class SurProfileTarget final : public TargetModel {
 public:
  explicit SurProfileTarget(SurData data);

  Eigen::Index dimension() const override { return 2 * data_.coefficients_per_equation(); }
  StateSpace space() const override { return StateSpace::continuous; }
  double log_density(const Vector& beta) const override;
  bool has_gradient() const override { return true; }
  Vector gradient(const Vector& beta) const override;
  const SurData& data() const { return data_; }

 private:
  SurData data_;
};

}  // namespace mmcmc
