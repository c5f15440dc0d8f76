#include "mmcmc/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mmcmc/error.hpp"

namespace mmcmc {

namespace {

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == kLogZero) return kLogZero;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double isotropic_log_normal(const Vector& x, const Vector& mean, double var) {
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean).squaredNorm() / var;
}

}  // namespace

// --- mixture ---------------------------------------------------------------

GaussianMixtureParams GaussianMixtureParams::benchmark(Eigen::Index d) {
  if (d <= 0) throw Error("mixture dimension must be positive");
  GaussianMixtureParams p;
  p.mean1 = -Vector::Ones(d);
  p.mean2 = Vector::Ones(d);
  const double scale = std::sqrt(static_cast<double>(d) / 100.0);
  p.var1 = 0.5 * scale;
  p.var2 = scale;
  return p;
}

void GaussianMixtureParams::validate() const {
  if (mean1.size() == 0 || mean1.size() != mean2.size())
    throw Error("mixture means must be non-empty and of equal length");
  if (!(var1 > 0.0) || !(var2 > 0.0)) throw Error("mixture variances must be positive");
  if (mean1 == mean2) throw Error("mixture means must differ");
}

double mixture_log_density(const Vector& x, const GaussianMixtureParams& p) {
  if (x.size() != p.dimension()) throw Error("mixture_log_density: dimension mismatch");
  const double a = isotropic_log_normal(x, p.mean1, p.var1);
  const double b = isotropic_log_normal(x, p.mean2, p.var2);
  return log_sum_exp(a, b) - std::numbers::ln2;
}

Vector mixture_gradient(const Vector& x, const GaussianMixtureParams& p) {
  if (x.size() != p.dimension()) throw Error("mixture_gradient: dimension mismatch");
  const double a = isotropic_log_normal(x, p.mean1, p.var1);
  const double b = isotropic_log_normal(x, p.mean2, p.var2);
  const double total = log_sum_exp(a, b);
  const double r1 = std::exp(a - total);
  const double r2 = std::exp(b - total);
  return -r1 * (x - p.mean1) / p.var1 - r2 * (x - p.mean2) / p.var2;
}

GaussianMixtureTarget::GaussianMixtureTarget(GaussianMixtureParams params)
    : params_(std::move(params)) {
  params_.validate();
}

// --- autologistic ----------------------------------------------------------

std::vector<std::pair<int, int>> lattice_pairs_8(int height, int width) {
  std::vector<std::pair<int, int>> pairs;
  auto id = [width](int r, int c) { return r * width + c; };
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      // Forward half of the neighbourhood so each pair is listed once.
      if (c + 1 < width) pairs.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < height) {
        pairs.emplace_back(id(r, c), id(r + 1, c));
        if (c + 1 < width) pairs.emplace_back(id(r, c), id(r + 1, c + 1));
        if (c > 0) pairs.emplace_back(id(r, c), id(r + 1, c - 1));
      }
    }
  }
  for (auto& [i, j] : pairs)
    if (i > j) std::swap(i, j);
  return pairs;
}

AutologisticParams AutologisticParams::make(int height, int width,
                                            std::vector<std::uint8_t> observed, double alpha,
                                            double beta) {
  if (height <= 0 || width <= 0) throw Error("lattice dimensions must be positive");
  if (observed.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
    throw Error("observed image size does not match lattice");
  if (alpha < 0.0 || beta < 0.0) throw Error("autologistic parameters must be non-negative");
  for (auto v : observed)
    if (v > 1) throw Error("observed image must be binary");
  AutologisticParams p;
  p.height = height;
  p.width = width;
  p.observed = std::move(observed);
  p.alpha = alpha;
  p.beta = beta;
  p.adjacency = lattice_pairs_8(height, width);
  return p;
}

SufficientStats autologistic_suff_stats(const Vector& x, const AutologisticParams& p) {
  if (x.size() != p.sites()) throw Error("autologistic_suff_stats: dimension mismatch");
  SufficientStats s;
  for (int i = 0; i < p.sites(); ++i)
    s.agree_with_observed += (x[i] > 0.5) == (p.observed[i] == 1) ? 1 : 0;
  for (const auto& [i, j] : p.adjacency) s.agree_neighbours += (x[i] > 0.5) == (x[j] > 0.5) ? 1 : 0;
  return s;
}

double autologistic_log_density_unnorm(const Vector& x, const AutologisticParams& p) {
  const SufficientStats s = autologistic_suff_stats(x, p);
  return p.alpha * static_cast<double>(s.agree_with_observed) +
         p.beta * static_cast<double>(s.agree_neighbours);
}

double autologistic_site_conditional(const Vector& x, int site, const AutologisticParams& p) {
  if (site < 0 || site >= p.sites()) throw Error("site index out of range");
  double logit = p.alpha * (p.observed[site] == 1 ? 1.0 : -1.0);
  for (const auto& [i, j] : p.adjacency) {
    int other = -1;
    if (i == site) other = j;
    if (j == site) other = i;
    if (other >= 0) logit += p.beta * (x[other] > 0.5 ? 1.0 : -1.0);
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

AutologisticTarget::AutologisticTarget(AutologisticParams params) : params_(std::move(params)) {
  neighbours_.resize(params_.sites());
  for (const auto& [i, j] : params_.adjacency) {
    neighbours_[i].push_back(j);
    neighbours_[j].push_back(i);
  }
}

double AutologisticTarget::log_density(const Vector& x) const {
  return autologistic_log_density_unnorm(x, params_);
}

double AutologisticTarget::flip_delta(const Vector& x, Eigen::Index site) const {
  const bool xi = x[site] > 0.5;
  const bool yi = params_.observed[site] == 1;
  // Flipping changes agreement with y by +-1 and each neighbour agreement by +-1.
  double delta = params_.alpha * (xi == yi ? -1.0 : 1.0);
  int same = 0;
  for (int j : neighbours_[site]) same += (x[j] > 0.5) == xi ? 1 : 0;
  const int total = static_cast<int>(neighbours_[site].size());
  delta += params_.beta * static_cast<double>(total - 2 * same);
  return delta;
}

double AutologisticTarget::site_conditional(const Vector& x, int site) const {
  double logit = params_.alpha * (params_.observed[site] == 1 ? 1.0 : -1.0);
  for (int j : neighbours_[site]) logit += params_.beta * (x[j] > 0.5 ? 1.0 : -1.0);
  return 1.0 / (1.0 + std::exp(-logit));
}

Vector AutologisticTarget::decode(std::uint64_t code) const {
  Vector x(params_.sites());
  for (int i = 0; i < params_.sites(); ++i) x[i] = static_cast<double>((code >> i) & 1U);
  return x;
}

std::uint64_t AutologisticTarget::encode(const Vector& x) const {
  std::uint64_t code = 0;
  for (int i = 0; i < params_.sites(); ++i)
    if (x[i] > 0.5) code |= std::uint64_t{1} << i;
  return code;
}

std::vector<double> AutologisticTarget::enumerate_probabilities() const {
  if (params_.sites() > 20) throw Error("brute-force enumeration limited to 20 sites");
  const std::uint64_t count = std::uint64_t{1} << params_.sites();
  std::vector<double> logw(count);
  for (std::uint64_t c = 0; c < count; ++c) logw[c] = log_density(decode(c));
  const double m = *std::max_element(logw.begin(), logw.end());
  std::vector<double> p(count);
  double z = 0.0;
  for (std::uint64_t c = 0; c < count; ++c) z += p[c] = std::exp(logw[c] - m);
  for (double& v : p) v /= z;
  return p;
}

// --- tabular ---------------------------------------------------------------

TabularTarget::TabularTarget(std::vector<double> probabilities,
                             std::vector<std::vector<int>> adjacency)
    : probs_(std::move(probabilities)), adjacency_(std::move(adjacency)) {
  if (probs_.empty()) throw Error("tabular target needs at least one state");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p > 0.0)) throw Error("tabular probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error("tabular probabilities must sum to 1");
  if (!adjacency_.empty() && adjacency_.size() != probs_.size())
    throw Error("adjacency size does not match state count");
  log_probs_.resize(probs_.size());
  std::transform(probs_.begin(), probs_.end(), log_probs_.begin(),
                 [](double p) { return std::log(p); });
}

TabularTarget TabularTarget::from_log_weights(const std::vector<double>& log_weights,
                                              std::vector<std::vector<int>> adjacency) {
  if (log_weights.empty()) throw Error("tabular target needs at least one state");
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> p(log_weights.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += p[i] = std::exp(log_weights[i] - m);
  for (double& v : p) v /= z;
  // Absorb the last rounding error so the sum is 1 to machine precision.
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  p.back() += 1.0 - total;
  return TabularTarget(std::move(p), std::move(adjacency));
}

double TabularTarget::log_density(const Vector& x) const {
  if (!std::isfinite(x[0])) return kLogZero;
  const long long i = std::llround(x[0]);
  if (i < 0 || i >= static_cast<long long>(probs_.size())) return kLogZero;
  return log_probs_[static_cast<std::size_t>(i)];
}

double TabularTarget::mean_index() const {
  double m = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) m += static_cast<double>(i) * probs_[i];
  return m;
}

// --- SUR -------------------------------------------------------------------

void SurData::validate() const {
  const Eigen::Index n_obs = y1.size();
  if (n_obs < 3) throw Error("SUR data needs at least three observations");
  if (y2.size() != n_obs || x1.rows() != n_obs || x2.rows() != n_obs)
    throw Error("SUR equations must share the sample size");
  if (x1.cols() == 0 || x1.cols() != x2.cols())
    throw Error("SUR equations must have the same positive number of covariates");
}

SurData SurData::swapped() const { return SurData{y2, y1, x2, x1}; }

SurData SurData::bimodal_example() {
  SurData d;
  d.x1.resize(9, 1);
  d.x2.resize(9, 1);
  d.y1.resize(9);
  d.y2.resize(9);
  d.x1.col(0) << -0.36, 0.98, -1.68, -0.15, 0.73, 0.10, 0.88, -1.35, 0.86;
  d.x2.col(0) << 1.05, -0.31, -0.17, 0.04, -0.81, -0.25, -0.95, -0.21, 1.28;
  d.y1 << 0.30, -0.29, 0.14, -0.59, -0.37, -0.99, -0.58, 0.48, 1.19;
  d.y2 << -0.13, 0.98, -1.91, 0.20, 0.88, -0.22, 0.65, -1.69, 1.12;
  return d;
}

Matrix sur_residuals(const Vector& beta, const SurData& data) {
  const Eigen::Index j = data.coefficients_per_equation();
  if (beta.size() != 2 * j) throw Error("SUR coefficient vector has wrong length");
  Matrix r(data.n(), 2);
  r.col(0) = data.y1 - data.x1 * beta.head(j);
  r.col(1) = data.y2 - data.x2 * beta.tail(j);
  return r;
}

Matrix sur_residual_covariance(const Vector& beta, const SurData& data) {
  const Matrix r = sur_residuals(beta, data);
  return r.transpose() * r / static_cast<double>(data.n());
}

double sur_profile_loglik(const Vector& beta, const SurData& data) {
  const Matrix sigma = sur_residual_covariance(beta, data);
  const double det = sigma.determinant();
  if (!(det > 1e-300) || !std::isfinite(det))
    throw NumericalError("singular residual covariance in SUR profile likelihood");
  const double n = static_cast<double>(data.n());
  return -n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(det) - n;
}

Vector sur_profile_gradient(const Vector& beta, const SurData& data) {
  const Eigen::Index j = data.coefficients_per_equation();
  const Matrix r = sur_residuals(beta, data);
  const Matrix sigma = r.transpose() * r / static_cast<double>(data.n());
  // d ell / d b_m = X_m' (R Sigma^-1)_{:, m}
  const Matrix weighted = r * sigma.inverse();
  Vector g(2 * j);
  g.head(j) = data.x1.transpose() * weighted.col(0);
  g.tail(j) = data.x2.transpose() * weighted.col(1);
  return g;
}

IglsResult zellner_igls(const SurData& data, double tol, int max_iter) {
  data.validate();
  const Eigen::Index j = data.coefficients_per_equation();
  const Eigen::Index n = data.n();
  Matrix x(2 * n, 2 * j);
  x.setZero();
  x.block(0, 0, n, j) = data.x1;
  x.block(n, j, n, j) = data.x2;
  Vector y(2 * n);
  y << data.y1, data.y2;

  Eigen::ColPivHouseholderQR<Matrix> rank_check(x);
  if (rank_check.rank() < 2 * j) throw Error("zellner_igls: rank-deficient design");

  auto gls = [&](const Matrix& sigma) {
    const Matrix omega = sigma.inverse();
    // (X' (Omega kron I) X) b = X' (Omega kron I) y, written block-wise.
    Matrix a(2 * j, 2 * j);
    Vector rhs(2 * j);
    const Matrix& x1 = data.x1;
    const Matrix& x2 = data.x2;
    a.block(0, 0, j, j) = omega(0, 0) * x1.transpose() * x1;
    a.block(0, j, j, j) = omega(0, 1) * x1.transpose() * x2;
    a.block(j, 0, j, j) = omega(1, 0) * x2.transpose() * x1;
    a.block(j, j, j, j) = omega(1, 1) * x2.transpose() * x2;
    rhs.head(j) = x1.transpose() * (omega(0, 0) * data.y1 + omega(0, 1) * data.y2);
    rhs.tail(j) = x2.transpose() * (omega(1, 0) * data.y1 + omega(1, 1) * data.y2);
    return Vector(a.ldlt().solve(rhs));
  };

  IglsResult result;
  Matrix sigma = Matrix::Identity(2, 2);
  Vector beta = gls(sigma);
  result.first_update = beta;
  for (int it = 1; it <= max_iter; ++it) {
    sigma = sur_residual_covariance(beta, data);
    if (!(sigma.determinant() > 0.0)) throw NumericalError("zellner_igls: singular covariance");
    const Vector next = gls(sigma);
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    result.iterations = it;
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  result.beta = beta;
  result.sigma = sur_residual_covariance(beta, data);
  return result;
}

SurProfileTarget::SurProfileTarget(SurData data) : data_(std::move(data)) { data_.validate(); }

double SurProfileTarget::log_density(const Vector& beta) const {
  return sur_profile_loglik(beta, data_);
}

Vector SurProfileTarget::gradient(const Vector& beta) const {
  return sur_profile_gradient(beta, data_);
}

}  // namespace mmcmc
