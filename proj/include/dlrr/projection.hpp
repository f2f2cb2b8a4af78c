#ifndef DLRR_PROJECTION_HPP
#define DLRR_PROJECTION_HPP

// Low-rank projection P = Y X^+ mapping (possibly corrupted) samples onto
// the subspaces spanned by the recovered training data. P is m x m; it is
// kept factored as (Y, X^+) and applied as Y (X^+ y).

#include "dlrr/linalg.hpp"

namespace dlrr {

struct ProjectionMatrix {
  Matrix recovered;   // Y, m x n
  Matrix source_pinv; // X^+, n x m
  Eigen::Index source_rank = 0;
  double fit_residual = 0.0;           // ||P X - Y||_F
  double relative_fit_residual = 0.0;  // fit_residual / ||Y||_F (0 when Y = 0)

  Eigen::Index dim() const { return recovered.rows(); }

  Matrix materialize() const { return recovered * source_pinv; }

  Vector apply(const VectorRef& y) const {
    if (y.size() != dim()) {
      throw DataError("projection: sample has length " + std::to_string(y.size()) +
                      ", expected " + std::to_string(dim()));
    }
    return recovered * (source_pinv * y);
  }

  Matrix apply_all(const MatrixRef& ys) const {
    if (ys.rows() != dim()) {
      throw DataError("projection: samples have " + std::to_string(ys.rows()) +
                      " rows, expected " + std::to_string(dim()));
    }
    return recovered * (source_pinv * ys);
  }
};

inline ProjectionMatrix learn_projection(const MatrixRef& x, const MatrixRef& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DataError("learn_projection: X is " + shape_str(x.rows(), x.cols()) + " but Y is " +
                    shape_str(y.rows(), y.cols()));
  }
  require_finite(y, "learn_projection");
  ProjectionMatrix p;
  p.recovered = y;
  p.source_pinv = pinv(x);
  p.source_rank = numerical_rank(x);
  p.fit_residual = (p.recovered * (p.source_pinv * x) - y).norm();
  const double ynorm = y.norm();
  p.relative_fit_residual = ynorm > 0.0 ? p.fit_residual / ynorm : 0.0;
  return p;
}

inline Vector correct_sample(const ProjectionMatrix& p, const VectorRef& y) { return p.apply(y); }

}  // namespace dlrr

#endif  // DLRR_PROJECTION_HPP
