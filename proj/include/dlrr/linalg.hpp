#ifndef DLRR_LINALG_HPP
#define DLRR_LINALG_HPP

// Dense kernels shared by the solvers: thin SVD, the two proximal operators
// (singular value thresholding and column-wise l2,1 shrinkage), the
// Moore-Penrose pseudo-inverse and ridge regression.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "dlrr/error.hpp"

namespace dlrr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a) {
  return a.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& a, const char* what) {
  if (!a.allFinite()) {
    throw DataError(std::string(what) + ": matrix contains NaN or Inf");
  }
}

struct SvdFactors {
  Matrix U;  // m x k, orthonormal columns
  Vector S;  // k, non-increasing, >= 0
  Matrix V;  // n x k, orthonormal columns
};

/// Thin SVD, k = min(m, n).
inline SvdFactors svd(const MatrixRef& a) {
  require_finite(a, "svd");
  SvdFactors f;
  if (a.size() == 0) {
    f.U.resize(a.rows(), 0);
    f.V.resize(a.cols(), 0);
    return f;
  }
  Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw SolverError("svd: factorization of " + shape_str(a.rows(), a.cols()) +
                      " matrix did not converge (status " +
                      std::to_string(static_cast<int>(dec.info())) + ")");
  }
  f.U = dec.matrixU();
  f.S = dec.singularValues();
  f.V = dec.matrixV();
  return f;
}

inline Vector singular_values(const MatrixRef& a) {
  require_finite(a, "singular_values");
  if (a.size() == 0) return Vector();
  Eigen::BDCSVD<Matrix> dec(a);
  if (dec.info() != Eigen::Success) {
    throw SolverError("singular_values: factorization of " +
                      shape_str(a.rows(), a.cols()) + " matrix did not converge");
  }
  return dec.singularValues();
}

inline double nuclear_norm(const MatrixRef& a) { return singular_values(a).sum(); }

inline double spectral_norm(const MatrixRef& a) {
  Vector s = singular_values(a);
  return s.size() == 0 ? 0.0 : s(0);
}

/// Sum of column l2 norms.
inline double l21_norm(const MatrixRef& a) { return a.colwise().norm().sum(); }

/// Proximal operator of tau*||.||_*: U diag(max(S - tau, 0)) V^T.
inline Matrix svt(const MatrixRef& a, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("svt: threshold must be nonnegative");
  SvdFactors f = svd(a);
  Eigen::Index keep = 0;
  while (keep < f.S.size() && f.S(keep) > tau) ++keep;
  if (keep == 0) return Matrix::Zero(a.rows(), a.cols());
  Vector shrunk = f.S.head(keep).array() - tau;
  return f.U.leftCols(keep) * shrunk.asDiagonal() * f.V.leftCols(keep).transpose();
}

/// Proximal operator of tau*||.||_{2,1}. Columns with norm <= tau vanish.
inline Matrix shrink_l21(const MatrixRef& q, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("shrink_l21: threshold must be nonnegative");
  require_finite(q, "shrink_l21");
  Matrix out(q.rows(), q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double nrm = q.col(j).norm();
    if (nrm <= tau) {
      out.col(j).setZero();
    } else {
      out.col(j) = (1.0 - tau / nrm) * q.col(j);
    }
  }
  return out;
}

/// Relative cutoff below which singular values count as zero in pinv.
inline double pinv_cutoff(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * sigma_max * 1e-12;
}

/// Moore-Penrose pseudo-inverse (n x m for an m x n input).
inline Matrix pinv(const MatrixRef& a) {
  SvdFactors f = svd(a);
  if (f.S.size() == 0 || f.S(0) == 0.0) return Matrix::Zero(a.cols(), a.rows());
  const double cut = pinv_cutoff(a.rows(), a.cols(), f.S(0));
  Eigen::Index keep = 0;
  while (keep < f.S.size() && f.S(keep) > cut) ++keep;
  Vector inv = f.S.head(keep).cwiseInverse();
  return f.V.leftCols(keep) * inv.asDiagonal() * f.U.leftCols(keep).transpose();
}

/// Numerical rank with the same cutoff pinv uses.
inline Eigen::Index numerical_rank(const MatrixRef& a) {
  Vector s = singular_values(a);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = pinv_cutoff(a.rows(), a.cols(), s(0));
  return (s.array() > cut).count();
}

/// Cholesky-factored (X^T X + lambda I). Built once, solved per right-hand side.
class RidgeOperator {
 public:
  RidgeOperator() = default;

  RidgeOperator(const MatrixRef& x, double lambda) : x_(x), lambda_(lambda) {
    if (!(lambda > 0.0)) throw ConfigError("ridge: lambda must be positive");
    require_finite(x, "ridge");
    Matrix gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success) {
      throw SolverError("ridge: normal matrix of " + shape_str(x.rows(), x.cols()) +
                        " system is not positive definite");
    }
  }

  Eigen::Index rows() const { return x_.rows(); }
  Eigen::Index cols() const { return x_.cols(); }
  double lambda() const { return lambda_; }
  const Matrix& design() const { return x_; }

  /// Solves (X^T X + lambda I) rho = X^T y with one refinement pass.
  Vector solve(const VectorRef& y) const {
    if (y.size() != x_.rows()) {
      throw DataError("ridge: right-hand side has length " + std::to_string(y.size()) +
                      ", expected " + std::to_string(x_.rows()));
    }
    require_finite(y, "ridge");
    const Vector rhs = x_.transpose() * y;
    Vector rho = llt_.solve(rhs);
    Vector r = rhs - apply_normal(rho);
    rho += llt_.solve(r);
    r = rhs - apply_normal(rho);
    const double bound = 1e-8 * rhs.norm();
    if (!rho.allFinite() || r.norm() > bound) {
      throw SolverError("ridge: system too ill-conditioned, residual " +
                        std::to_string(r.norm()) + " exceeds " + std::to_string(bound));
    }
    return rho;
  }

 private:
  Vector apply_normal(const Vector& v) const {
    return x_.transpose() * (x_ * v) + lambda_ * v;
  }

  Matrix x_;
  double lambda_ = 0.0;
  Eigen::LLT<Matrix> llt_;
};

inline Vector ridge_solve(const MatrixRef& x, const VectorRef& y, double lambda) {
  return RidgeOperator(x, lambda).solve(y);
}

}  // namespace dlrr

#endif  // DLRR_LINALG_HPP
