#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sclasso/dataset.hpp"

namespace sclasso {

/// Tolerance absorbing roundoff in dual-feasibility checks; the dual point
/// construction is feasible exactly, so this never masks a real violation.
inline constexpr double kFeasTol = 1e-10;

inline double soft_threshold(double x, double tau) {
  const double shrunk = std::abs(x) - tau;
  return shrunk > 0.0 ? std::copysign(shrunk, x) : 0.0;
}

enum class Screening { None, GapSafe, BoundSafe, GapSafePlusPlus };

struct SolverConfig {
  double lambda = 1.0;
  double sigma0 = 1e-2;       // noise floor, must stay strictly positive
  double eps = 1e-6;          // duality-gap tolerance
  int max_sweeps = 5000;
  int gap_check_every = 10;   // full passes between gap evaluations
  Screening screening = Screening::GapSafe;

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("config: lambda must be positive");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("config: sigma0 must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("config: max_sweeps must be >= 1");
    if (gap_check_every < 1) throw std::invalid_argument("config: gap_check_every must be >= 1");
  }
};

/// Solver iterate. The residual is maintained incrementally during sweeps and
/// rebuilt from scratch at every gap evaluation, which bounds the drift.
struct PrimalState {
  Eigen::VectorXd beta;
  double sigma = 0.0;
  Eigen::VectorXd residual;   // y - X * beta
  std::vector<int> active;    // ascending feature indices still in play
};

struct DualPoint {
  Eigen::VectorXd theta;
  bool feasible = false;
};

/// Membership in { ||X^T theta||_inf <= 1, lambda sqrt(n) ||theta|| <= 1 }.
inline bool dual_feasible(const Dataset& ds, const Eigen::VectorXd& theta, double lambda) {
  const double inf_norm = (ds.X.transpose() * theta).lpNorm<Eigen::Infinity>();
  const double ball = lambda * std::sqrt(static_cast<double>(ds.n())) * theta.norm();
  return inf_norm <= 1.0 + kFeasTol && ball <= 1.0 + kFeasTol;
}

/// ||y - X beta||^2 / (2 n sigma) + sigma / 2 + lambda ||beta||_1.
/// Throws below the noise floor, where the objective is infinite.
inline double primal_objective(const Dataset& ds, const Eigen::VectorXd& beta, double sigma,
                               double lambda, double sigma0) {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("primal_objective: sigma0 must be positive");
  if (sigma < sigma0) throw std::domain_error("primal_objective: sigma below the noise floor");
  const double n = static_cast<double>(ds.n());
  const double rss = (ds.y - ds.X * beta).squaredNorm();
  return rss / (2.0 * n * sigma) + 0.5 * sigma + lambda * beta.lpNorm<1>();
}

/// <y, lambda theta> + sigma0 (1/2 - lambda^2 n ||theta||^2 / 2).
inline double dual_objective(const Dataset& ds, const Eigen::VectorXd& theta, double lambda,
                             double sigma0) {
  const double n = static_cast<double>(ds.n());
  return lambda * ds.y.dot(theta) +
         sigma0 * (0.5 - 0.5 * lambda * lambda * n * theta.squaredNorm());
}

/// Closed-form scale at a given beta: sigma0 v (||y - X beta|| / sqrt(n)).
inline double sigma_hat(const Dataset& ds, const Eigen::VectorXd& beta, double sigma0) {
  return std::max(sigma0, (ds.y - ds.X * beta).norm() /
                              std::sqrt(static_cast<double>(ds.n())));
}

/// Residual rescaled into the dual feasible set. Feasible by construction;
/// the flag records an explicit re-check of both constraints. With an exact
/// fit (y = X beta) the noise-floor term keeps the denominator positive and
/// the returned point is zero.
inline DualPoint dual_feasible_point(const Dataset& ds, const Eigen::VectorXd& beta,
                                     double lambda, double sigma0) {
  const double n = static_cast<double>(ds.n());
  const Eigen::VectorXd r = ds.y - ds.X * beta;
  const double denom = std::max({lambda * n * sigma0,
                                 (ds.X.transpose() * r).lpNorm<Eigen::Infinity>(),
                                 lambda * std::sqrt(n) * r.norm()});
  DualPoint dp;
  dp.theta = r / denom;
  dp.feasible = dual_feasible(ds, dp.theta, lambda);
  return dp;
}

/// Primal minus dual at the given iterate; nonnegative up to roundoff for any
/// feasible dual point. Uses the maintained residual of the state.
inline double duality_gap(const Dataset& ds, const PrimalState& st, const DualPoint& dp,
                          const SolverConfig& cfg) {
  if (!dp.feasible) throw std::invalid_argument("duality_gap: infeasible dual point");
  if (st.sigma < cfg.sigma0) throw std::domain_error("duality_gap: sigma below the noise floor");
  const double n = static_cast<double>(ds.n());
  const double primal = st.residual.squaredNorm() / (2.0 * n * st.sigma) + 0.5 * st.sigma +
                        cfg.lambda * st.beta.lpNorm<1>();
  return primal - dual_objective(ds, dp.theta, cfg.lambda, cfg.sigma0);
}

/// Smallest lambda at which the all-zeros solution is optimal:
/// ||X^T y||_inf / (n (sigma0 v ||y||/sqrt(n))).
inline double lambda_max(const Dataset& ds, double sigma0) {
  const double n = static_cast<double>(ds.n());
  const double scale = std::max(sigma0, ds.y_norm / std::sqrt(n));
  return (ds.X.transpose() * ds.y).lpNorm<Eigen::Infinity>() / (n * scale);
}

/// Worst violation of the stationarity conditions
/// X^T (y - X beta) in n lambda sigma times the l1 subdifferential at beta.
inline double kkt_violation(const Dataset& ds, const PrimalState& st, double lambda) {
  const double threshold = static_cast<double>(ds.n()) * lambda * st.sigma;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < ds.p(); ++j) {
    const double g = ds.X.col(j).dot(st.residual);
    const double bj = st.beta[j];
    const double v = bj != 0.0 ? std::abs(g - std::copysign(threshold, bj))
                               : std::max(0.0, std::abs(g) - threshold);
    worst = std::max(worst, v);
  }
  return worst;
}

// --- plain Lasso counterparts, used by the baseline estimators ---

inline double lasso_primal(const Dataset& ds, const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(ds.n());
  return (ds.y - ds.X * beta).squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

inline double lasso_dual(const Dataset& ds, const Eigen::VectorXd& theta, double lambda) {
  const double n = static_cast<double>(ds.n());
  return ds.y.squaredNorm() / (2.0 * n) -
         (ds.y - lambda * n * theta).squaredNorm() / (2.0 * n);
}

/// Standard residual rescaling (y - X beta) / (lambda n v ||X^T (y - X beta)||_inf).
/// The feasibility flag reflects the Lasso dual constraint only.
inline DualPoint lasso_dual_point(const Dataset& ds, const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(ds.n());
  const Eigen::VectorXd r = ds.y - ds.X * beta;
  const double denom = std::max(lambda * n, (ds.X.transpose() * r).lpNorm<Eigen::Infinity>());
  DualPoint dp;
  dp.theta = r / denom;
  dp.feasible = (ds.X.transpose() * dp.theta).lpNorm<Eigen::Infinity>() <= 1.0 + kFeasTol;
  return dp;
}

inline double lasso_gap(const Dataset& ds, const Eigen::VectorXd& beta, double lambda) {
  const DualPoint dp = lasso_dual_point(ds, beta, lambda);
  return lasso_primal(ds, beta, lambda) - lasso_dual(ds, dp.theta, lambda);
}

/// Critical parameter of the plain Lasso, ||X^T y||_inf / n.
inline double lasso_lambda_max(const Dataset& ds) {
  return (ds.X.transpose() * ds.y).lpNorm<Eigen::Infinity>() /
         static_cast<double>(ds.n());
}

}  // namespace sclasso
