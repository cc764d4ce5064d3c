#pragma once

#include "protorel/common.hpp"

namespace protorel {

struct PcaResult {
  Eigen::MatrixXd projection;  ///< n x 2
  Eigen::MatrixXd axes;        ///< 2 x m, orthonormal rows
  Eigen::VectorXd mean;        ///< m
  Eigen::Vector2d variances;

  /// Projects further points (rows) with the same centering and axes.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const {
    return (rows.rowwise() - mean.transpose()) * axes.transpose();
  }
};

namespace detail {

inline constexpr double kPcaTolerance = 1e-10;
inline constexpr std::size_t kPcaMaxIterations = 100000;

/// Dominant eigenvector of the PSD matrix `c`, started from the first
/// coordinate axis (in order, starting at `first_axis`) that `c` does not
/// annihilate. Returns a zero vector when c = 0.
inline Eigen::VectorXd power_iteration(const Eigen::MatrixXd& c, Eigen::Index first_axis) {
  const Eigen::Index m = c.rows();
  const double scale = std::max(c.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (Eigen::Index a = 0; a < m; ++a) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(m, (first_axis + a) % m);
    Eigen::VectorXd w = c * v;
    if (w.norm() <= 1e-14 * scale) continue;
    v = w.normalized();
    for (std::size_t it = 0; it < kPcaMaxIterations; ++it) {
      w = c * v;
      const double n = w.norm();
      if (n <= 1e-14 * scale) break;
      w /= n;
      const double delta = (w - v).norm();
      v = w;
      if (delta < kPcaTolerance) break;
    }
    return v;
  }
  return Eigen::VectorXd::Zero(m);
}

}  // namespace detail

/// Mean-centred projection onto the top two principal directions, found by
/// power iteration with deflation.
inline PcaResult project_pca(const Eigen::MatrixXd& x) {
  if (x.rows() < 3) throw InvalidArgument("PCA needs at least 3 points");
  if (x.cols() < 2) throw InvalidArgument("PCA needs dimension >= 2");
  if (!all_finite(x)) throw InvalidArgument("PCA input has non-finite values");
  PcaResult r;
  r.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centred = x.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(x.rows());
  const double total = cov.trace();
  if (!(total > 1e-300) || cov.cwiseAbs().maxCoeff() <= 1e-14 * centred.cwiseAbs().maxCoeff()) {
    throw InvalidArgument("PCA input has rank 0 (all points identical)");
  }

  const Eigen::Index m = x.cols();
  Eigen::VectorXd v1 = detail::power_iteration(cov, 0);
  const double l1 = v1.dot(cov * v1);
  const Eigen::MatrixXd deflated = cov - l1 * v1 * v1.transpose();
  Eigen::VectorXd v2 = detail::power_iteration(deflated, 1);
  v2 -= v2.dot(v1) * v1;
  if (v2.norm() < 1e-8) {
    // Rank-1 data: any direction orthogonal to v1 carries zero variance.
    for (Eigen::Index a = 1; a <= m; ++a) {
      v2 = Eigen::VectorXd::Unit(m, a % m);
      v2 -= v2.dot(v1) * v1;
      if (v2.norm() > 1e-6) break;
    }
  }
  v2.normalize();
  double l2 = v2.dot(cov * v2);
  if (l2 > l1) {
    std::swap(v1, v2);
    l2 = v2.dot(cov * v2);
  }
  r.axes.resize(2, m);
  r.axes.row(0) = v1.transpose();
  r.axes.row(1) = v2.transpose();
  r.variances = {v1.dot(cov * v1), l2};
  r.projection = centred * r.axes.transpose();
  return r;
}

}  // namespace protorel
