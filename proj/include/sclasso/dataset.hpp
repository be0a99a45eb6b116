#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

namespace sclasso {

/// Immutable regression data: response, dense column-accessible design, and
/// the cached per-column squared norms used throughout the coordinate sweeps.
/// Construct through make_dataset so the caches stay consistent with X.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd col_norms_sq;
  double y_norm = 0.0;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

inline Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() < 1 || X.cols() < 1)
    throw std::invalid_argument("dataset: need n >= 1 and p >= 1");
  if (X.rows() != y.size())
    throw std::invalid_argument("dataset: X and y disagree on the number of rows");
  Dataset ds;
  ds.col_norms_sq = X.colwise().squaredNorm();
  ds.y_norm = y.norm();
  if (!(ds.y_norm > 0.0))
    throw std::invalid_argument("dataset: y must be nonzero");
  ds.X = std::move(X);
  ds.y = std::move(y);
  return ds;
}

}  // namespace sclasso
