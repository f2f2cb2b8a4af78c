#ifndef DLRR_FEATURES_HPP
#define DLRR_FEATURES_HPP

// Eigenface-style PCA: the basis comes from the SVD of the mean-centred
// data, ordered by explained variance.

#include <string>

#include "dlrr/linalg.hpp"

namespace dlrr {

struct FeatureSpace {
  Matrix basis;             // m x d, orthonormal columns
  Vector mean;              // m
  Vector explained_variance;  // d, non-increasing

  Eigen::Index dim() const { return basis.cols(); }
  Eigen::Index ambient_dim() const { return basis.rows(); }
};

/// Eigenvalues at or below this fraction of the largest count as zero.
inline constexpr double kPcaDegenerateRatio = 1e-12;

inline FeatureSpace fit_pca(const MatrixRef& d, Eigen::Index dim) {
  require_finite(d, "fit_pca");
  if (dim < 1) throw ConfigError("fit_pca: dimension must be positive");
  if (d.cols() < 2 || dim > std::min(d.rows(), d.cols() - 1)) {
    throw ConfigError("fit_pca: dimension " + std::to_string(dim) + " exceeds min(rows, cols-1) for " +
                      shape_str(d.rows(), d.cols()) + " data");
  }
  FeatureSpace fs;
  fs.mean = d.rowwise().mean();
  const Matrix centred = d.colwise() - fs.mean;
  SvdFactors f = svd(centred);
  const Vector eig = f.S.array().square() / static_cast<double>(d.cols() - 1);
  const double top = eig.size() ? eig(0) : 0.0;
  // Centring leaves rounding noise on constant data; spreads that small
  // relative to the data itself count as zero as well.
  const double noise_floor = kPcaDegenerateRatio * d.norm();
  const Eigen::Index usable =
      (eig.array() > kPcaDegenerateRatio * top && f.S.array() > noise_floor).count();
  if (dim > usable) {
    throw ConfigError("fit_pca: requested " + std::to_string(dim) + " dimensions but data has only " +
                      std::to_string(usable) + " non-degenerate directions");
  }
  fs.basis = f.U.leftCols(dim);
  // Sign convention: the largest-magnitude entry of every basis vector is positive.
  for (Eigen::Index k = 0; k < dim; ++k) {
    Eigen::Index arg = 0;
    fs.basis.col(k).cwiseAbs().maxCoeff(&arg);
    if (fs.basis(arg, k) < 0.0) fs.basis.col(k) *= -1.0;
  }
  fs.explained_variance = eig.head(dim);
  return fs;
}

inline Vector project(const FeatureSpace& fs, const VectorRef& v) {
  if (v.size() != fs.ambient_dim()) {
    throw DataError("project: vector has length " + std::to_string(v.size()) + ", expected " +
                    std::to_string(fs.ambient_dim()));
  }
  return fs.basis.transpose() * (v - fs.mean);
}

/// Column-wise project().
inline Matrix project_all(const FeatureSpace& fs, const MatrixRef& v) {
  if (v.rows() != fs.ambient_dim()) {
    throw DataError("project: matrix has " + std::to_string(v.rows()) + " rows, expected " +
                    std::to_string(fs.ambient_dim()));
  }
  return fs.basis.transpose() * (v.colwise() - fs.mean);
}

inline Vector reconstruct(const FeatureSpace& fs, const VectorRef& coords) {
  return fs.mean + fs.basis * coords;
}

}  // namespace dlrr

#endif  // DLRR_FEATURES_HPP
