#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sclasso/dataset.hpp"
#include "sclasso/errors.hpp"
#include "sclasso/rng.hpp"

namespace sclasso {

/// Gaussian design with AR(1) covariance rho^{|i-j|}, Laplace coefficients
/// with a fixed-size random subset forced to zero, and noise scaled so the
/// signal-to-noise ratio beta*' Sigma beta* / sigma*^2 hits snr exactly.
struct SyntheticSpec {
  int n = 100;
  int p = 500;
  double rho = 0.6;
  double snr = 5.0;
  double s = 0.9;  // fraction of coefficients forced to zero
  double sigma_star = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || p < 1) throw std::invalid_argument("synthetic: need n >= 1 and p >= 1");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("synthetic: need 0 <= rho < 1");
    if (!(snr > 0.0)) throw std::invalid_argument("synthetic: snr must be positive");
    if (!(s >= 0.0 && s < 1.0))
      throw std::invalid_argument("synthetic: need 0 <= s < 1 so some signal survives");
    if (!(sigma_star > 0.0)) throw std::invalid_argument("synthetic: sigma_star must be positive");
  }
};

struct SyntheticData {
  Dataset data;
  Eigen::VectorXd beta_star;
  std::vector<int> support;
};

/// b' Sigma b for Sigma_ij = rho^{|i-j|}, in one pass over the banded
/// structure: with t_i = rho t_{i-1} + b_i the form equals sum b_i (2 t_i - b_i).
inline double ar1_quadratic_form(const Eigen::VectorXd& b, double rho) {
  double total = 0.0;
  double t = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    t = rho * t + b[i];
    total += b[i] * (2.0 * t - b[i]);
  }
  return total;
}

/// Draw one synthetic problem. Deterministic in the seed; the design, the
/// coefficients, the sparsity mask, and the noise ride separate substreams.
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng design_rng(spec.seed, rng_stream::kDesign);
  Rng coef_rng(spec.seed, rng_stream::kCoefficients);
  Rng mask_rng(spec.seed, rng_stream::kSparsityMask);
  Rng noise_rng(spec.seed, rng_stream::kNoise);

  // Rows i.i.d. N(0, Sigma) realized exactly by the AR(1) recursion
  // x_1 = z_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j.
  Eigen::MatrixXd X(spec.n, spec.p);
  const double innovation = std::sqrt(1.0 - spec.rho * spec.rho);
  for (int i = 0; i < spec.n; ++i) {
    double prev = design_rng.normal();
    X(i, 0) = prev;
    for (int j = 1; j < spec.p; ++j) {
      prev = spec.rho * prev + innovation * design_rng.normal();
      X(i, j) = prev;
    }
  }

  Eigen::VectorXd beta(spec.p);
  for (int j = 0; j < spec.p; ++j) beta[j] = coef_rng.laplace();

  // Uniformly random floor(s * p)-subset forced to zero (fixed size, so the
  // support has a deterministic cardinality). The floor is taken with a tiny
  // shift so that values like 0.3 * 10 do not round down spuriously.
  const int zeroed = static_cast<int>(std::floor(spec.s * spec.p + 1e-9));
  std::vector<int> idx(static_cast<std::size_t>(spec.p));
  for (int j = 0; j < spec.p; ++j) idx[static_cast<std::size_t>(j)] = j;
  for (int i = 0; i < zeroed; ++i)
    std::swap(idx[i], idx[i + static_cast<int>(mask_rng.below(
                              static_cast<std::uint64_t>(spec.p - i)))]);
  for (int i = 0; i < zeroed; ++i) beta[idx[static_cast<std::size_t>(i)]] = 0.0;

  const double quad = ar1_quadratic_form(beta, spec.rho);
  if (!(quad > 0.0))
    throw DegenerateDesignError("synthetic: all signal coordinates vanished");
  const double alpha = std::sqrt(spec.snr * spec.sigma_star * spec.sigma_star / quad);

  SyntheticData out;
  out.beta_star = alpha * beta;
  for (int j = 0; j < spec.p; ++j)
    if (out.beta_star[j] != 0.0) out.support.push_back(j);

  Eigen::VectorXd y = X * out.beta_star;
  for (int i = 0; i < spec.n; ++i) y[i] += spec.sigma_star * noise_rng.normal();

  out.data = make_dataset(std::move(X), std::move(y));
  return out;
}

}  // namespace sclasso
