#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "sclasso/problem.hpp"
#include "sclasso/screening.hpp"

namespace sclasso {

struct FitResult {
  Eigen::VectorXd beta;
  double sigma = 0.0;
  double gap = std::numeric_limits<double>::infinity();  // certified final gap
  int sweeps = 0;
  int gap_checks = 0;
  // (sweep index, fraction of [p] discarded) at each certificate evaluation.
  std::vector<std::pair<int, double>> screened_fraction_trace;
  bool converged = false;
  std::vector<int> active;  // features never discarded, ascending
};

struct PathSpec {
  int T = 100;
  double delta = 2.0;
  std::vector<double> lambdas;  // explicit decreasing grid override

  void validate() const {
    if (!lambdas.empty()) {
      for (std::size_t t = 0; t < lambdas.size(); ++t) {
        if (!(lambdas[t] > 0.0))
          throw std::invalid_argument("path: explicit grid values must be positive");
        if (t > 0 && !(lambdas[t] < lambdas[t - 1]))
          throw std::invalid_argument("path: explicit grid must be strictly decreasing");
      }
      return;
    }
    if (T < 1) throw std::invalid_argument("path: T must be >= 1");
    if (!(delta > 0.0)) throw std::invalid_argument("path: delta must be positive");
  }
};

enum class WarmStart { Cold, PreviousBeta, ActiveSetPresolve };

struct PathResult {
  std::vector<double> lambdas;
  std::vector<FitResult> fits;
  std::vector<WarmStart> warm_start;
  double total_wall_ms = 0.0;
};

/// Geometric grid lambda_t = top * 10^{-delta (t-1)/(T-1)}, t = 1..T.
inline std::vector<double> lambda_grid(double top, int T, double delta) {
  std::vector<double> grid(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    grid[t] = T == 1 ? top : top * std::pow(10.0, -delta * t / static_cast<double>(T - 1));
  return grid;
}

/// One cyclic pass over st.active in ascending order, each coordinate moved to
/// its exact minimizer at the scale held at sweep entry, followed by the
/// closed-form scale update. The residual is maintained incrementally.
inline void cd_sweep(const Dataset& ds, PrimalState& st, double lambda, double sigma0) {
  const double n = static_cast<double>(ds.n());
  const double threshold = n * lambda * st.sigma;
  for (int j : st.active) {
    const double norm_sq = ds.col_norms_sq[j];
    if (norm_sq == 0.0) continue;
    const double old = st.beta[j];
    const double updated =
        soft_threshold(old + ds.X.col(j).dot(st.residual) / norm_sq, threshold / norm_sq);
    if (updated != old) {
      st.residual -= (updated - old) * ds.X.col(j);
      st.beta[j] = updated;
    }
  }
  st.sigma = std::max(sigma0, st.residual.norm() / std::sqrt(n));
}

/// Default starting point: all-zeros coefficients, the scale they induce, and
/// every column with positive norm in play.
inline PrimalState default_state(const Dataset& ds, const SolverConfig& cfg) {
  PrimalState st;
  st.beta = Eigen::VectorXd::Zero(ds.p());
  st.residual = ds.y;
  st.sigma = std::max(cfg.sigma0, ds.y_norm / std::sqrt(static_cast<double>(ds.n())));
  st.active.reserve(static_cast<std::size_t>(ds.p()));
  for (int j = 0; j < static_cast<int>(ds.p()); ++j)
    if (ds.col_norms_sq[j] > 0.0) st.active.push_back(j);
  return st;
}

namespace detail {

/// Core certificate-checked coordinate-descent loop. With `restricted` set the
/// certificate is evaluated on the design restricted to st.active (the
/// warm-start presolve); such a certificate is valid for the restricted
/// problem only and the caller must follow up with an unrestricted run.
inline FitResult run_cd(const Dataset& ds, const SolverConfig& cfg, PrimalState& st,
                        bool restricted) {
  cfg.validate();
  const double n = static_cast<double>(ds.n());
  const double root_n = std::sqrt(n);
  const double lam = cfg.lambda;
  const int p = static_cast<int>(ds.p());

  FitResult res;
  Eigen::VectorXd xtr(p);
  std::optional<Eigen::VectorXd> xty;  // built once if the bound rule runs

  // The restricted problem's feature universe is fixed at entry; internal
  // screening may shrink st.active further but the certificate stays on it.
  const std::vector<int> restriction = restricted ? st.active : std::vector<int>{};

  double gap = std::numeric_limits<double>::infinity();
  double primal = gap;
  double dual_value = -gap;
  double theta_scale = 1.0;  // theta = residual / theta_scale

  const auto certificate = [&]() {
    st.residual.noalias() = ds.y - ds.X * st.beta;
    st.sigma = std::max(cfg.sigma0, st.residual.norm() / root_n);
    double inf_norm = 0.0;
    if (restricted) {
      for (int j : restriction)
        inf_norm = std::max(inf_norm, std::abs(ds.X.col(j).dot(st.residual)));
    } else {
      xtr.noalias() = ds.X.transpose() * st.residual;
      inf_norm = xtr.lpNorm<Eigen::Infinity>();
    }
    const double res_norm = st.residual.norm();
    theta_scale = std::max({lam * n * cfg.sigma0, inf_norm, lam * root_n * res_norm});
    primal = res_norm * res_norm / (2.0 * n * st.sigma) + 0.5 * st.sigma +
             lam * st.beta.lpNorm<1>();
    dual_value = lam * ds.y.dot(st.residual) / theta_scale +
                 cfg.sigma0 * (0.5 - 0.5 * lam * lam * n * res_norm * res_norm /
                                         (theta_scale * theta_scale));
    gap = primal - dual_value;
    ++res.gap_checks;
  };

  const auto apply_screening = [&]() {
    const bool bound_rule = cfg.screening == Screening::BoundSafe;
    BoundPair bp;
    double radius = 0.0;
    if (bound_rule) {
      if (!xty) xty = ds.X.transpose() * ds.y;
      bp = make_bound_pair(ds, dual_value, primal, cfg.sigma0);
    } else {
      radius = gap_safe_radius(gap, lam, cfg.sigma0, ds.n());
    }
    std::vector<int> keep;
    keep.reserve(st.active.size());
    for (int j : st.active) {
      const double col_norm = std::sqrt(ds.col_norms_sq[j]);
      const bool drop =
          bound_rule
              ? bound_safe_discards((*xty)[j], col_norm, bp, lam, root_n, ds.y_norm)
              : gap_safe_discards(restricted ? ds.X.col(j).dot(st.residual) / theta_scale
                                             : xtr[j] / theta_scale,
                                  col_norm, radius);
      if (drop) {
        if (st.beta[j] != 0.0) {
          st.residual += st.beta[j] * ds.X.col(j);
          st.beta[j] = 0.0;
        }
      } else {
        keep.push_back(j);
      }
    }
    st.active = std::move(keep);
  };

  const auto record_trace = [&](int sweep) {
    res.screened_fraction_trace.emplace_back(
        sweep, 1.0 - static_cast<double>(st.active.size()) / static_cast<double>(p));
  };

  int sweep = 0;
  bool converged = false;
  while (sweep < cfg.max_sweeps) {
    if (sweep % cfg.gap_check_every == 0) {
      certificate();
      if (gap <= cfg.eps) {
        converged = true;
        record_trace(sweep);
        break;
      }
      if (cfg.screening != Screening::None) apply_screening();
      record_trace(sweep);
    }
    cd_sweep(ds, st, lam, cfg.sigma0);
    ++sweep;
  }
  if (!converged) {
    certificate();
    converged = gap <= cfg.eps;
    record_trace(sweep);
  }

  res.beta = st.beta;
  res.sigma = st.sigma;
  res.gap = gap;
  res.sweeps = sweep;
  res.converged = converged;
  res.active = st.active;
  return res;
}

}  // namespace detail

/// Coordinate descent for the smoothed concomitant problem at a single lambda.
/// An init supplies warm-start coefficients and scale; the working set is
/// always rebuilt from the full feature range because safe certificates do
/// not transfer between lambdas. Non-convergence within the sweep budget is
/// reported through the converged flag, never thrown.
inline FitResult fit(const Dataset& ds, const SolverConfig& cfg,
                     std::optional<PrimalState> init = std::nullopt) {
  cfg.validate();
  PrimalState st;
  if (init) {
    st = std::move(*init);
    if (st.beta.size() != ds.p()) throw std::invalid_argument("fit: init beta has wrong size");
    if (st.sigma < cfg.sigma0) throw std::invalid_argument("fit: init sigma below the floor");
    st.residual.noalias() = ds.y - ds.X * st.beta;
  } else {
    st = default_state(ds, cfg);
  }
  st.active.clear();
  for (int j = 0; j < static_cast<int>(ds.p()); ++j) {
    if (ds.col_norms_sq[j] > 0.0)
      st.active.push_back(j);
    else
      st.beta[j] = 0.0;  // zero-norm columns are pinned at zero
  }
  return detail::run_cd(ds, cfg, st, /*restricted=*/false);
}

/// Warm-started solve over a decreasing grid. In GapSafePlusPlus mode each
/// lambda after the first is preceded by a solve restricted to the previous
/// safe active set (up to presolve_sweeps passes at presolve_eps); that run
/// only improves the warm start and its certificate is not reused. Negative
/// presolve arguments pick up the sweep budget and tolerance of cfg.
inline PathResult fit_path(const Dataset& ds, const SolverConfig& cfg, const PathSpec& spec,
                           int presolve_sweeps = -1, double presolve_eps = -1.0) {
  cfg.validate();
  spec.validate();
  const auto t_start = std::chrono::steady_clock::now();

  PathResult out;
  out.lambdas = spec.lambdas.empty()
                    ? lambda_grid(lambda_max(ds, cfg.sigma0), spec.T, spec.delta)
                    : spec.lambdas;
  const int presolve_budget = presolve_sweeps >= 0 ? presolve_sweeps : cfg.max_sweeps;
  const double presolve_tol = presolve_eps > 0.0 ? presolve_eps : cfg.eps;

  Eigen::VectorXd carry_beta;
  double carry_sigma = 0.0;
  std::vector<int> carry_active;

  for (std::size_t t = 0; t < out.lambdas.size(); ++t) {
    SolverConfig step = cfg;
    step.lambda = out.lambdas[t];

    WarmStart tag = t == 0 ? WarmStart::Cold : WarmStart::PreviousBeta;
    std::optional<PrimalState> init;
    int presolve_sweep_count = 0;
    int presolve_check_count = 0;

    if (t > 0) {
      PrimalState warm;
      warm.beta = carry_beta;
      warm.sigma = std::max(cfg.sigma0, carry_sigma);
      if (cfg.screening == Screening::GapSafePlusPlus && presolve_budget > 0 &&
          !carry_active.empty()) {
        SolverConfig pre = step;
        pre.max_sweeps = presolve_budget;
        pre.eps = presolve_tol;
        pre.screening = Screening::GapSafe;
        warm.residual.noalias() = ds.y - ds.X * warm.beta;
        warm.active = carry_active;
        const FitResult pre_fit = detail::run_cd(ds, pre, warm, /*restricted=*/true);
        presolve_sweep_count = pre_fit.sweeps;
        presolve_check_count = pre_fit.gap_checks;
        warm.beta = pre_fit.beta;
        warm.sigma = pre_fit.sigma;
        tag = WarmStart::ActiveSetPresolve;
      }
      init = std::move(warm);
    }

    FitResult fr = fit(ds, step, std::move(init));
    fr.sweeps += presolve_sweep_count;
    fr.gap_checks += presolve_check_count;

    carry_beta = fr.beta;
    carry_sigma = fr.sigma;
    carry_active = fr.active;
    out.fits.push_back(std::move(fr));
    out.warm_start.push_back(tag);
  }

  out.total_wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
  return out;
}

/// Plain cyclic coordinate descent for the Lasso with gap-based stopping;
/// serves the baseline noise estimators. The returned sigma is the residual
/// scale ||y - X beta|| / sqrt(n).
inline FitResult lasso_fit(const Dataset& ds, double lambda, double eps = 1e-4,
                           int max_sweeps = 5000,
                           std::optional<Eigen::VectorXd> init = std::nullopt,
                           int gap_check_every = 10) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lasso_fit: lambda must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("lasso_fit: eps must be positive");
  if (max_sweeps < 1 || gap_check_every < 1)
    throw std::invalid_argument("lasso_fit: invalid iteration limits");

  const double n = static_cast<double>(ds.n());
  const int p = static_cast<int>(ds.p());
  Eigen::VectorXd beta = init ? std::move(*init) : Eigen::VectorXd::Zero(p);
  if (beta.size() != p) throw std::invalid_argument("lasso_fit: init beta has wrong size");
  Eigen::VectorXd residual = ds.y - ds.X * beta;

  FitResult res;
  res.active.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    if (ds.col_norms_sq[j] > 0.0) res.active.push_back(j);

  double gap = std::numeric_limits<double>::infinity();
  const auto certificate = [&]() {
    residual.noalias() = ds.y - ds.X * beta;
    const double denom =
        std::max(lambda * n, (ds.X.transpose() * residual).lpNorm<Eigen::Infinity>());
    const double primal = residual.squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
    const double dual_value = ds.y.squaredNorm() / (2.0 * n) -
                              (ds.y - (lambda * n / denom) * residual).squaredNorm() / (2.0 * n);
    gap = primal - dual_value;
    ++res.gap_checks;
  };

  int sweep = 0;
  bool converged = false;
  while (sweep < max_sweeps) {
    if (sweep % gap_check_every == 0) {
      certificate();
      if (gap <= eps) {
        converged = true;
        break;
      }
    }
    const double threshold = n * lambda;
    for (int j : res.active) {
      const double norm_sq = ds.col_norms_sq[j];
      const double old = beta[j];
      const double updated =
          soft_threshold(old + ds.X.col(j).dot(residual) / norm_sq, threshold / norm_sq);
      if (updated != old) {
        residual -= (updated - old) * ds.X.col(j);
        beta[j] = updated;
      }
    }
    ++sweep;
  }
  if (!converged) {
    certificate();
    converged = gap <= eps;
  }

  res.beta = std::move(beta);
  res.sigma = residual.norm() / std::sqrt(n);
  res.gap = gap;
  res.sweeps = sweep;
  res.converged = converged;
  return res;
}

}  // namespace sclasso
