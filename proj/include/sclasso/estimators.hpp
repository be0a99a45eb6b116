#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sclasso/errors.hpp"
#include "sclasso/rng.hpp"
#include "sclasso/solver.hpp"

namespace sclasso {

enum class Method {
  Oracle,          // OR: projection on the true support
  ScCv,            // SC_CV: smoothed concomitant path, 5-fold cross-validation
  ScLs,            // SC_LS: least-squares refit on the SC_CV support
  LassoCv,         // L_CV
  LassoLs,         // L_LS
  LassoUniversal,  // L_U: lasso at sqrt(2 log(p) / n)
  Rcv,             // RCV: refitted cross-validation on a half split
  Dicker,          // D2: moment estimator
  ScaledLasso,     // SZ: alternating lasso / scale iteration
};

inline const char* method_code(Method m) {
  switch (m) {
    case Method::Oracle: return "OR";
    case Method::ScCv: return "SC_CV";
    case Method::ScLs: return "SC_LS";
    case Method::LassoCv: return "L_CV";
    case Method::LassoLs: return "L_LS";
    case Method::LassoUniversal: return "L_U";
    case Method::Rcv: return "RCV";
    case Method::Dicker: return "D2";
    case Method::ScaledLasso: return "SZ";
  }
  return "?";
}

inline std::optional<Method> method_from_code(std::string_view code) {
  for (Method m : {Method::Oracle, Method::ScCv, Method::ScLs, Method::LassoCv, Method::LassoLs,
                   Method::LassoUniversal, Method::Rcv, Method::Dicker, Method::ScaledLasso})
    if (code == method_code(m)) return m;
  return std::nullopt;
}

struct NoiseEstimate {
  Method method = Method::Oracle;
  double sigma = 0.0;
  int support_size = 0;
  std::optional<double> lambda_selected;
  bool clamped = false;  // degenerate value clamped to zero (flagged, not fatal)
};

/// Coordinate descent produces exact zeros; the threshold guards roundoff only.
inline constexpr double kSupportTol = 1e-12;

inline std::vector<int> support_of(const Eigen::VectorXd& beta) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(beta.size()); ++j)
    if (std::abs(beta[j]) > kSupportTol) out.push_back(j);
  return out;
}

/// ||y - P_S y|| where P_S projects onto the span of the selected columns,
/// computed through a rank-revealing SVD with the Moore-Penrose cutoff
/// max(n, |S|) * machine_eps * sigma_max. An empty selection projects onto
/// the origin, so the full norm of y comes back.
inline double projection_residual_norm(const Dataset& ds, const std::vector<int>& S) {
  if (S.empty()) return ds.y_norm;
  Eigen::MatrixXd cols(ds.n(), static_cast<Eigen::Index>(S.size()));
  for (std::size_t k = 0; k < S.size(); ++k) {
    if (S[k] < 0 || S[k] >= static_cast<int>(ds.p()))
      throw std::invalid_argument("projection_residual_norm: index out of range");
    cols.col(static_cast<Eigen::Index>(k)) = ds.X.col(S[k]);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = static_cast<double>(std::max<std::size_t>(ds.n(), S.size())) *
                        std::numeric_limits<double>::epsilon() * (sv.size() ? sv[0] : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;
  if (rank == 0) return ds.y_norm;
  const auto basis = svd.matrixU().leftCols(rank);
  return (ds.y - basis * (basis.transpose() * ds.y)).norm();
}

namespace detail {

inline NoiseEstimate refit_sigma(const Dataset& ds, const std::vector<int>& S, Method tag) {
  const int dof = static_cast<int>(ds.n()) - static_cast<int>(S.size());
  if (dof <= 0)
    throw DegreesOfFreedomError("refit: support size " + std::to_string(S.size()) +
                                " leaves no residual degrees of freedom (n = " +
                                std::to_string(ds.n()) + ")");
  NoiseEstimate est;
  est.method = tag;
  est.sigma = projection_residual_norm(ds, S) / std::sqrt(static_cast<double>(dof));
  est.support_size = static_cast<int>(S.size());
  return est;
}

}  // namespace detail

/// Noise scale from the projection on the true support (a theoretical
/// reference; unbiased for the squared scale).
inline NoiseEstimate oracle_sigma(const Dataset& ds, const std::vector<int>& S_star) {
  return detail::refit_sigma(ds, S_star, Method::Oracle);
}

/// Least-squares refit on an estimated support.
inline NoiseEstimate ls_refit_sigma(const Dataset& ds, const std::vector<int>& S_hat,
                                    Method tag = Method::ScLs) {
  return detail::refit_sigma(ds, S_hat, tag);
}

struct CvConfig {
  int folds = 5;
  PathSpec grid;            // shared grid; anchored at the family's lambda_max
  std::uint64_t seed = 0;   // fold shuffle
  bool keep_fold_fits = false;
};

enum class CvFamily { Lasso, SmoothedConcomitant };

struct CvSelection {
  double lambda_cv = 0.0;
  NoiseEstimate estimate;
  Eigen::VectorXd beta;          // full-data fit at lambda_cv
  std::vector<int> support;
  std::vector<double> lambdas;
  std::vector<double> cv_score;  // mean held-out squared prediction error
  double final_gap = 0.0;
  bool final_converged = true;
  std::vector<std::vector<int>> test_folds;                // row indices per fold
  std::vector<std::vector<Eigen::VectorXd>> fold_betas;    // folds x lambdas, on request
};

namespace detail {

inline std::vector<std::vector<int>> make_folds(int n, int folds, std::uint64_t seed,
                                                std::uint64_t stream) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, stream);
  for (int i = 0; i < n - 1; ++i)
    std::swap(order[i], order[i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)))]);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i % folds)].push_back(order[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

inline Dataset rows_subset(const Dataset& ds, const std::vector<int>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), ds.p());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = ds.X.row(rows[i]);
    y[static_cast<Eigen::Index>(i)] = ds.y[rows[i]];
  }
  return make_dataset(std::move(X), std::move(y));
}

inline std::vector<int> complement_rows(int n, const std::vector<int>& rows) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - rows.size());
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < rows.size() && rows[k] == i)
      ++k;
    else
      out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Pick lambda on a shared geometric grid by k-fold cross-validation against
/// mean held-out squared prediction error, then refit on all data. Ties on
/// the score go to the largest lambda (the sparser model). The reported sigma
/// divides the penalized fit's residual norm by sqrt(n - |support|).
inline CvSelection cv_select(const Dataset& ds, const CvConfig& cfg, CvFamily family,
                             double eps = 1e-4, double sigma0 = -1.0) {
  if (cfg.folds < 2) throw std::invalid_argument("cv: need at least 2 folds");
  if (ds.n() < cfg.folds) throw std::invalid_argument("cv: need n >= folds");
  cfg.grid.validate();

  const double n = static_cast<double>(ds.n());
  const double sigma0_eff = sigma0 > 0.0 ? sigma0 : ds.y_norm / std::sqrt(n) * 1e-2;
  const double top = family == CvFamily::Lasso ? lasso_lambda_max(ds)
                                               : lambda_max(ds, sigma0_eff);

  CvSelection sel;

  // Fully decorrelated design: every fit is all-zeros, so skip the solves and
  // resolve the tie at the top of the (degenerate) grid.
  if (!(top > 0.0)) {
    sel.lambda_cv = top;
    sel.beta = Eigen::VectorXd::Zero(ds.p());
    sel.lambdas.assign(static_cast<std::size_t>(cfg.grid.T), top);
    sel.cv_score.assign(static_cast<std::size_t>(cfg.grid.T), ds.y.squaredNorm() / n);
    sel.estimate.method = family == CvFamily::Lasso ? Method::LassoCv : Method::ScCv;
    sel.estimate.sigma = ds.y_norm / std::sqrt(n);
    sel.estimate.lambda_selected = top;
    return sel;
  }

  sel.lambdas = cfg.grid.lambdas.empty() ? lambda_grid(top, cfg.grid.T, cfg.grid.delta)
                                         : cfg.grid.lambdas;
  const std::size_t T = sel.lambdas.size();
  sel.test_folds = detail::make_folds(static_cast<int>(ds.n()), cfg.folds, cfg.seed,
                                      rng_stream::kCvFolds);
  if (cfg.keep_fold_fits) sel.fold_betas.resize(sel.test_folds.size());

  std::vector<double> sse(T, 0.0);
  for (std::size_t f = 0; f < sel.test_folds.size(); ++f) {
    const auto& test_rows = sel.test_folds[f];
    const Dataset train =
        detail::rows_subset(ds, detail::complement_rows(static_cast<int>(ds.n()), test_rows));
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(ds.p());
    double warm_sigma = std::max(sigma0_eff, train.y_norm / std::sqrt(double(train.n())));
    for (std::size_t t = 0; t < T; ++t) {
      Eigen::VectorXd beta_t;
      if (family == CvFamily::Lasso) {
        beta_t = lasso_fit(train, sel.lambdas[t], eps, 5000, warm).beta;
      } else {
        SolverConfig sc;
        sc.lambda = sel.lambdas[t];
        sc.sigma0 = sigma0_eff;
        sc.eps = eps;
        PrimalState init;
        init.beta = warm;
        init.sigma = warm_sigma;
        const FitResult fr = fit(train, sc, init);
        beta_t = fr.beta;
        warm_sigma = fr.sigma;
      }
      for (int i : test_rows) {
        const double err = ds.y[i] - ds.X.row(i).dot(beta_t);
        sse[t] += err * err;
      }
      warm = beta_t;
      if (cfg.keep_fold_fits) sel.fold_betas[f].push_back(beta_t);
    }
  }

  sel.cv_score.resize(T);
  std::size_t best = 0;
  for (std::size_t t = 0; t < T; ++t) {
    sel.cv_score[t] = sse[t] / n;
    if (sel.cv_score[t] < sel.cv_score[best]) best = t;  // first minimum = largest lambda
  }
  sel.lambda_cv = sel.lambdas[best];

  if (family == CvFamily::Lasso) {
    const FitResult fr = lasso_fit(ds, sel.lambda_cv, eps);
    sel.beta = fr.beta;
    sel.final_gap = fr.gap;
    sel.final_converged = fr.converged;
  } else {
    SolverConfig sc;
    sc.lambda = sel.lambda_cv;
    sc.sigma0 = sigma0_eff;
    sc.eps = eps;
    const FitResult fr = fit(ds, sc);
    sel.beta = fr.beta;
    sel.final_gap = fr.gap;
    sel.final_converged = fr.converged;
  }
  sel.support = support_of(sel.beta);

  const int dof = static_cast<int>(ds.n()) - static_cast<int>(sel.support.size());
  if (dof <= 0)
    throw DegreesOfFreedomError("cv: selected support of size " +
                                std::to_string(sel.support.size()) +
                                " leaves no residual degrees of freedom");
  sel.estimate.method = family == CvFamily::Lasso ? Method::LassoCv : Method::ScCv;
  sel.estimate.sigma = (ds.y - ds.X * sel.beta).norm() / std::sqrt(static_cast<double>(dof));
  sel.estimate.support_size = static_cast<int>(sel.support.size());
  sel.estimate.lambda_selected = sel.lambda_cv;
  return sel;
}

/// Refitted cross-validation: a random half split, lasso cross-validation to
/// select a support on each half, projection residual on the opposite half,
/// root-mean-square combination.
inline NoiseEstimate rcv_sigma(const Dataset& ds, const CvConfig& cfg, std::uint64_t seed) {
  const int n = static_cast<int>(ds.n());
  if (n < 2 * cfg.folds) throw std::invalid_argument("rcv: need n >= 2 * folds");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, rng_stream::kRcvSplit);
  for (int i = 0; i < n - 1; ++i)
    std::swap(order[i], order[i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)))]);
  std::vector<int> half1(order.begin(), order.begin() + n / 2);
  std::vector<int> half2(order.begin() + n / 2, order.end());
  std::sort(half1.begin(), half1.end());
  std::sort(half2.begin(), half2.end());

  const Dataset d1 = detail::rows_subset(ds, half1);
  const Dataset d2 = detail::rows_subset(ds, half2);

  const auto half_sigma_sq = [&](const Dataset& select_on, const Dataset& refit_on,
                                 std::uint64_t half_tag) {
    CvConfig half_cfg = cfg;
    half_cfg.seed = mix_seed(seed, half_tag);
    half_cfg.keep_fold_fits = false;
    const CvSelection sel = cv_select(select_on, half_cfg, CvFamily::Lasso);
    const int dof = static_cast<int>(refit_on.n()) - static_cast<int>(sel.support.size());
    if (dof <= 0)
      throw DegreesOfFreedomError("rcv: half support of size " +
                                  std::to_string(sel.support.size()) +
                                  " exhausts the opposite half");
    const double resid = projection_residual_norm(refit_on, sel.support);
    return std::pair<double, std::size_t>{resid * resid / static_cast<double>(dof),
                                          sel.support.size()};
  };

  const auto [s1, k1] = half_sigma_sq(d1, d2, 1);
  const auto [s2, k2] = half_sigma_sq(d2, d1, 2);

  NoiseEstimate est;
  est.method = Method::Rcv;
  est.sigma = std::sqrt(0.5 * (s1 + s2));
  est.support_size = static_cast<int>(k1 + k2);
  return est;
}

/// Moment estimator from the normalized Gram matrix. A negative radicand is
/// clamped to zero and flagged; a vanishing second moment is reported as a
/// degenerate design.
inline NoiseEstimate dicker_sigma(const Dataset& ds) {
  const double n = static_cast<double>(ds.n());
  const double p = static_cast<double>(ds.p());
  const Eigen::MatrixXd gram = ds.X.transpose() * ds.X / n;
  const double m1 = gram.trace() / p;
  const double m2 = gram.squaredNorm() / p - m1 * m1 * p / n;
  if (std::abs(m2) <= 1e-12)
    throw DegenerateDesignError("dicker: second spectral moment vanishes");
  const double xty_sq = (ds.X.transpose() * ds.y).squaredNorm();
  const double value = (1.0 + p * m1 * m1 / ((n + 1.0) * m2)) * ds.y.squaredNorm() / n -
                       m1 * xty_sq / (n * (n + 1.0) * m2);
  NoiseEstimate est;
  est.method = Method::Dicker;
  est.clamped = value < 0.0;
  est.sigma = std::sqrt(std::max(value, 0.0));
  return est;
}

/// Lasso at the universal parameter sqrt(2 log(p) / n); sigma follows the
/// (n - |support|)-normalized residual convention of the CV estimators.
inline NoiseEstimate universal_lasso_sigma(const Dataset& ds, double eps = 1e-4) {
  if (ds.p() < 2) throw std::invalid_argument("universal lasso: need p >= 2");
  const double n = static_cast<double>(ds.n());
  const double lambda = std::sqrt(2.0 * std::log(static_cast<double>(ds.p())) / n);
  const FitResult fr = lasso_fit(ds, lambda, eps);
  const std::vector<int> support = support_of(fr.beta);
  const int dof = static_cast<int>(ds.n()) - static_cast<int>(support.size());
  if (dof <= 0)
    throw DegreesOfFreedomError("universal lasso: support exhausts the sample");
  NoiseEstimate est;
  est.method = Method::LassoUniversal;
  est.sigma = (ds.y - ds.X * fr.beta).norm() / std::sqrt(static_cast<double>(dof));
  est.support_size = static_cast<int>(support.size());
  est.lambda_selected = lambda;
  return est;
}

struct ScaledLassoResult {
  Eigen::VectorXd beta;
  double sigma = 0.0;
  int iters = 0;
  bool interpolating = false;  // exact fit reached; sigma pinned at zero
};

/// Alternating scheme: lasso at lambda * sigma, then sigma from the residual
/// norm, stopping once consecutive scale increments fall inside tol_sigma.
inline ScaledLassoResult scaled_lasso(const Dataset& ds, double lambda,
                                      double tol_sigma = 1e-4, int max_iters = 100,
                                      double lasso_eps = 1e-4,
                                      std::optional<Eigen::VectorXd> init = std::nullopt) {
  if (!(lambda > 0.0)) throw std::invalid_argument("scaled lasso: lambda must be positive");
  if (!(tol_sigma > 0.0) || max_iters < 1)
    throw std::invalid_argument("scaled lasso: invalid stopping parameters");
  const double root_n = std::sqrt(static_cast<double>(ds.n()));

  ScaledLassoResult out;
  out.beta = init ? std::move(*init) : Eigen::VectorXd::Zero(ds.p());
  out.sigma = ds.y_norm / root_n;
  for (int it = 1; it <= max_iters; ++it) {
    out.beta = lasso_fit(ds, lambda * out.sigma, lasso_eps, 5000, out.beta).beta;
    const double next = (ds.y - ds.X * out.beta).norm() / root_n;
    out.iters = it;
    if (next == 0.0) {
      out.sigma = 0.0;
      out.interpolating = true;
      return out;
    }
    const bool done = std::abs(next - out.sigma) <= tol_sigma;
    out.sigma = next;
    if (done) return out;
  }
  return out;
}

/// Cross-validated scaled lasso over the concomitant geometric grid: the
/// per-lambda model is the alternating solver, lambda_cv minimizes mean
/// held-out squared error, and the reported sigma is the solver's own scale
/// from the full-data fit at lambda_cv.
inline CvSelection scaled_lasso_cv(const Dataset& ds, const CvConfig& cfg,
                                   double sigma0 = -1.0, double tol_sigma = 1e-4,
                                   int max_iters = 100, double lasso_eps = 1e-4) {
  if (cfg.folds < 2) throw std::invalid_argument("cv: need at least 2 folds");
  if (ds.n() < cfg.folds) throw std::invalid_argument("cv: need n >= folds");
  cfg.grid.validate();

  const double n = static_cast<double>(ds.n());
  const double sigma0_eff = sigma0 > 0.0 ? sigma0 : ds.y_norm / std::sqrt(n) * 1e-2;
  const double top = lambda_max(ds, sigma0_eff);

  CvSelection sel;
  if (!(top > 0.0)) {
    sel.lambda_cv = top;
    sel.beta = Eigen::VectorXd::Zero(ds.p());
    sel.estimate.method = Method::ScaledLasso;
    sel.estimate.sigma = ds.y_norm / std::sqrt(n);
    sel.estimate.lambda_selected = top;
    return sel;
  }

  sel.lambdas = cfg.grid.lambdas.empty() ? lambda_grid(top, cfg.grid.T, cfg.grid.delta)
                                         : cfg.grid.lambdas;
  const std::size_t T = sel.lambdas.size();
  sel.test_folds = detail::make_folds(static_cast<int>(ds.n()), cfg.folds, cfg.seed,
                                      rng_stream::kCvFolds);

  std::vector<double> sse(T, 0.0);
  for (const auto& test_rows : sel.test_folds) {
    const Dataset train =
        detail::rows_subset(ds, detail::complement_rows(static_cast<int>(ds.n()), test_rows));
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(ds.p());
    for (std::size_t t = 0; t < T; ++t) {
      const ScaledLassoResult r =
          scaled_lasso(train, sel.lambdas[t], tol_sigma, max_iters, lasso_eps, warm);
      for (int i : test_rows) {
        const double err = ds.y[i] - ds.X.row(i).dot(r.beta);
        sse[t] += err * err;
      }
      warm = r.beta;
    }
  }

  sel.cv_score.resize(T);
  std::size_t best = 0;
  for (std::size_t t = 0; t < T; ++t) {
    sel.cv_score[t] = sse[t] / n;
    if (sel.cv_score[t] < sel.cv_score[best]) best = t;
  }
  sel.lambda_cv = sel.lambdas[best];

  const ScaledLassoResult fin = scaled_lasso(ds, sel.lambda_cv, tol_sigma, max_iters, lasso_eps);
  sel.beta = fin.beta;
  sel.support = support_of(fin.beta);
  sel.estimate.method = Method::ScaledLasso;
  sel.estimate.sigma = fin.sigma;
  sel.estimate.support_size = static_cast<int>(sel.support.size());
  sel.estimate.lambda_selected = sel.lambda_cv;
  sel.estimate.clamped = fin.interpolating;
  return sel;
}

}  // namespace sclasso
