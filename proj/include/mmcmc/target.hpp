#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mmcmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class StateSpace { continuous, binary_lattice, tabular };

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Unnormalized log-density over a continuous, binary-lattice or tabular space.
///
/// Binary states are stored as 0.0/1.0 entries; tabular states are
/// one-element vectors holding the state index. Out-of-support states return
/// kLogZero, never NaN.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual StateSpace space() const = 0;
  virtual double log_density(const Vector& x) const = 0;

  virtual bool has_gradient() const { return false; }
  virtual Vector gradient(const Vector& x) const;

  /// Normalized probabilities, tabular spaces only.
  virtual std::optional<std::vector<double>> exact_table() const { return std::nullopt; }

  /// log pi(x with site flipped) - log pi(x). Binary lattices override this
  /// with an O(neighbourhood) update.
  virtual double flip_delta(const Vector& x, Eigen::Index site) const;
};

/// Target whose log-density is scaled by an inverse temperature.
class TemperedTarget final : public TargetModel {
 public:
  TemperedTarget(const TargetModel& base, double inverse_temperature)
      : base_(&base), beta_(inverse_temperature) {}

  Eigen::Index dimension() const override { return base_->dimension(); }
  StateSpace space() const override { return base_->space(); }
  double log_density(const Vector& x) const override;
  bool has_gradient() const override { return base_->has_gradient(); }
  Vector gradient(const Vector& x) const override { return beta_ * base_->gradient(x); }
  double flip_delta(const Vector& x, Eigen::Index site) const override {
    return beta_ * base_->flip_delta(x, site);
  }

  double inverse_temperature() const { return beta_; }
  void set_inverse_temperature(double beta) { beta_ = beta; }
  const TargetModel& base() const { return *base_; }

 private:
  const TargetModel* base_;
  double beta_;
};

/// Central finite-difference gradient of target.log_density.
Vector finite_difference_gradient(const TargetModel& target, const Vector& x, double h = 1e-5);

/// Central finite-difference Hessian built from the analytic gradient when
/// available, otherwise from second differences of the log-density.
Matrix finite_difference_hessian(const TargetModel& target, const Vector& x, double h = 1e-4);

}  // namespace mmcmc
