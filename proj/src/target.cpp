#include "mmcmc/target.hpp"

#include <cmath>

#include "mmcmc/error.hpp"

namespace mmcmc {

Vector TargetModel::gradient(const Vector&) const {
  throw Error("target does not provide a gradient");
}

double TargetModel::flip_delta(const Vector& x, Eigen::Index site) const {
  Vector y = x;
  y[site] = 1.0 - y[site];
  return log_density(y) - log_density(x);
}

double TemperedTarget::log_density(const Vector& x) const {
  const double lp = base_->log_density(x);
  if (lp == kLogZero) return kLogZero;
  return beta_ * lp;
}

Vector finite_difference_gradient(const TargetModel& target, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    const double fp = target.log_density(xp);
    xp[i] = x[i] - step;
    const double fm = target.log_density(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Matrix finite_difference_hessian(const TargetModel& target, const Vector& x, double h) {
  const Eigen::Index d = x.size();
  Matrix hess(d, d);
  Vector xp = x;
  if (target.has_gradient()) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double step = h * std::max(1.0, std::abs(x[i]));
      xp[i] = x[i] + step;
      const Vector gp = target.gradient(xp);
      xp[i] = x[i] - step;
      const Vector gm = target.gradient(xp);
      xp[i] = x[i];
      hess.col(i) = (gp - gm) / (2.0 * step);
    }
  } else {
    const double f0 = target.log_density(x);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double si = h * std::max(1.0, std::abs(x[i]));
      for (Eigen::Index j = i; j < d; ++j) {
        const double sj = h * std::max(1.0, std::abs(x[j]));
        if (i == j) {
          xp[i] = x[i] + si;
          const double fp = target.log_density(xp);
          xp[i] = x[i] - si;
          const double fm = target.log_density(xp);
          xp[i] = x[i];
          hess(i, i) = (fp - 2.0 * f0 + fm) / (si * si);
        } else {
          auto eval = [&](double a, double b) {
            xp[i] = x[i] + a;
            xp[j] = x[j] + b;
            const double f = target.log_density(xp);
            xp[i] = x[i];
            xp[j] = x[j];
            return f;
          };
          hess(i, j) = (eval(si, sj) - eval(si, -sj) - eval(-si, sj) + eval(-si, -sj)) /
                       (4.0 * si * sj);
          hess(j, i) = hess(i, j);
        }
      }
    }
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace mmcmc
