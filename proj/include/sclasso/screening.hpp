#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sclasso/problem.hpp"

namespace sclasso {

/// Ball around a feasible dual point that is certified to contain the dual
/// optimum. The radius comes from the duality gap at construction time.
struct SafeSphere {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// sqrt(2 gap / (lambda^2 sigma0 n)). Certified gaps can round slightly
/// negative, so tiny negatives are clamped to zero.
inline double gap_safe_radius(double gap, double lambda, double sigma0, Eigen::Index n) {
  const double g = std::max(gap, 0.0);
  return std::sqrt(2.0 * g / (lambda * lambda * sigma0 * static_cast<double>(n)));
}

/// Per-feature sphere test given the precomputed value of X_j^T theta.
/// Zero-norm columns are always discardable.
inline bool gap_safe_discards(double xtheta_j, double col_norm_j, double radius) {
  return col_norm_j == 0.0 || std::abs(xtheta_j) + radius * col_norm_j < 1.0;
}

/// Features certified inactive by |X_j^T theta| + r ||X_j|| < 1.
inline std::vector<int> gap_safe_screen(const Dataset& ds, const SafeSphere& sphere) {
  std::vector<int> out;
  const Eigen::VectorXd xt_theta = ds.X.transpose() * sphere.center;
  for (int j = 0; j < static_cast<int>(ds.p()); ++j) {
    if (gap_safe_discards(xt_theta[j], std::sqrt(ds.col_norms_sq[j]), sphere.radius))
      out.push_back(j);
  }
  return out;
}

/// Valid lower/upper bounds on the optimal value together with the derived
/// slab parameters, clamped into 0 <= gamma_lo <= gamma_hi <= 1. Looser
/// bounds only weaken the test, never make it unsafe.
struct BoundPair {
  double eta_lo = 0.0;
  double eta_hi = 0.0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
};

inline BoundPair make_bound_pair(const Dataset& ds, double eta_lo, double eta_hi,
                                 double sigma0) {
  if (eta_lo > eta_hi) throw std::invalid_argument("bound pair: eta_lo exceeds eta_hi");
  const double root_n = std::sqrt(static_cast<double>(ds.n()));
  BoundPair bp;
  bp.eta_lo = eta_lo;
  bp.eta_hi = eta_hi;
  bp.gamma_hi = std::min(1.0, eta_hi * root_n / ds.y_norm);
  bp.gamma_lo =
      std::max(0.0, std::min((eta_lo - 0.5 * sigma0) * root_n / ds.y_norm, bp.gamma_hi));
  return bp;
}

/// Largest |theta^T x| over the unit-ball cap { ||theta|| <= 1,
/// gamma_lo <= theta^T y' <= gamma_hi } for unit vectors x, y' with
/// c = x^T y'. Closed form from the planar reduction of the problem.
inline double max_abs_dot_in_slab(double c, double gamma_lo, double gamma_hi) {
  constexpr double grace = 1e-12;
  if (std::abs(c) > 1.0 + grace)
    throw std::invalid_argument("max_abs_dot_in_slab: |c| must be <= 1");
  if (gamma_lo < -grace || gamma_hi > 1.0 + grace || gamma_lo > gamma_hi + grace)
    throw std::invalid_argument("max_abs_dot_in_slab: need 0 <= gamma_lo <= gamma_hi <= 1");
  const double a = std::min(std::abs(c), 1.0);
  const double lo = std::clamp(gamma_lo, 0.0, 1.0);
  const double hi = std::clamp(gamma_hi, lo, 1.0);
  const auto arc_value = [a](double g) {
    return g * a + std::sqrt(std::max(0.0, 1.0 - g * g)) *
                       std::sqrt(std::max(0.0, 1.0 - a * a));
  };
  if (a > hi) return arc_value(hi);
  if (a < lo) return arc_value(lo);
  return 1.0;
}

/// Per-feature bound test given the precomputed value of X_j^T y.
inline bool bound_safe_discards(double xty_j, double col_norm_j, const BoundPair& bp,
                                double lambda, double root_n, double y_norm) {
  if (col_norm_j == 0.0) return true;
  const double c = std::clamp(xty_j / (col_norm_j * y_norm), -1.0, 1.0);
  return max_abs_dot_in_slab(c, bp.gamma_lo, bp.gamma_hi) < lambda * root_n / col_norm_j;
}

/// Features whose slab maximum falls below lambda sqrt(n) / ||X_j||; each such
/// feature is certified inactive at the optimum.
inline std::vector<int> bound_safe_screen(const Dataset& ds, const BoundPair& bp,
                                          double lambda) {
  std::vector<int> out;
  const Eigen::VectorXd xty = ds.X.transpose() * ds.y;
  const double root_n = std::sqrt(static_cast<double>(ds.n()));
  for (int j = 0; j < static_cast<int>(ds.p()); ++j) {
    if (bound_safe_discards(xty[j], std::sqrt(ds.col_norms_sq[j]), bp, lambda, root_n,
                            ds.y_norm))
      out.push_back(j);
  }
  return out;
}

}  // namespace sclasso
