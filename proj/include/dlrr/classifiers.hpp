#ifndef DLRR_CLASSIFIERS_HPP
#define DLRR_CLASSIFIERS_HPP

// Representation-based classifiers over a labelled dictionary:
//   CRC  ridge coding, regularized class residual ||y - X_i rho_i|| / ||rho_i||
//   SRC  l1 coding (ADMM), class residual ||y - X_i alpha_i||
//   LRC  per-class least squares, class residual ||y - X_i beta_i||
//   NN   nearest dictionary column
// Residual vectors are ordered by ascending class label; ties go to the
// lowest label.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dlrr/linalg.hpp"
#include "dlrr/sample_matrix.hpp"

namespace dlrr {

/// Query whose coefficients vanish on every class.
struct DegenerateQuery : Error {
  explicit DegenerateQuery(const std::string& what) : Error(ErrorKind::data, what) {}
};

class Dictionary {
 public:
  Dictionary() = default;

  /// Columns are scaled to unit l2 norm when `normalize` is set; zero
  /// columns stay zero.
  Dictionary(const MatrixRef& samples, const std::vector<int>& labels, bool normalize = true)
      : samples_(samples), normalized_(normalize) {
    if (static_cast<Eigen::Index>(labels.size()) != samples.cols()) {
      throw DataError("dictionary: label count does not match column count");
    }
    if (samples.cols() == 0) throw DataError("dictionary: no columns");
    require_finite(samples, "dictionary");
    SampleMatrix view(samples, labels);
    class_ids_ = view.classes();
    class_columns_.resize(class_ids_.size());
    class_of_column_.resize(labels.size());
    for (std::size_t c = 0; c < class_ids_.size(); ++c) {
      class_columns_[c] = view.columns_of(class_ids_[c]);
      for (Eigen::Index j : class_columns_[c]) class_of_column_[static_cast<std::size_t>(j)] = c;
    }
    labels_ = labels;
    if (normalize) {
      for (Eigen::Index j = 0; j < samples_.cols(); ++j) {
        const double nrm = samples_.col(j).norm();
        if (nrm > 0.0) samples_.col(j) /= nrm;
      }
    }
  }

  const Matrix& samples() const { return samples_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& class_ids() const { return class_ids_; }
  std::size_t class_count() const { return class_ids_.size(); }
  const std::vector<Eigen::Index>& columns_of_class(std::size_t c) const { return class_columns_[c]; }
  std::size_t class_of_column(Eigen::Index j) const { return class_of_column_[static_cast<std::size_t>(j)]; }
  bool normalized() const { return normalized_; }
  Eigen::Index dim() const { return samples_.rows(); }
  Eigen::Index size() const { return samples_.cols(); }

  Matrix class_block(std::size_t c) const { return samples_(Eigen::all, class_columns_[c]); }

 private:
  Matrix samples_;
  std::vector<int> labels_;
  std::vector<int> class_ids_;
  std::vector<std::vector<Eigen::Index>> class_columns_;
  std::vector<std::size_t> class_of_column_;
  bool normalized_ = true;
};

/// Representation coefficients in dictionary column order.
struct CoefficientVector {
  Vector values;
  std::vector<std::vector<Eigen::Index>> partition;  // per class, column indices

  Vector slice(std::size_t c) const { return values(partition[c]); }
};

enum class SolveStatus { converged, max_iterations };

struct ClassificationOutcome {
  int predicted_class = 0;
  std::vector<int> class_ids;  // ascending; residuals are aligned with it
  Vector per_class_residuals;
  CoefficientVector coefficients;
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
};

namespace detail {

inline void check_query(const Dictionary& dict, const VectorRef& y) {
  if (y.size() != dict.dim()) {
    throw DataError("query has length " + std::to_string(y.size()) + ", dictionary rows " +
                    std::to_string(dict.dim()));
  }
  require_finite(y, "query");
}

/// Lowest index attaining the minimum; +inf entries lose to any finite one.
inline std::size_t argmin_lowest(const Vector& r) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < r.size(); ++i) {
    if (r(i) < r(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

inline ClassificationOutcome make_outcome(const Dictionary& dict, Vector residuals, Vector coeffs) {
  ClassificationOutcome out;
  out.class_ids = dict.class_ids();
  const std::size_t best = argmin_lowest(residuals);
  out.predicted_class = out.class_ids[best];
  out.per_class_residuals = std::move(residuals);
  out.coefficients.values = std::move(coeffs);
  for (std::size_t c = 0; c < dict.class_count(); ++c) {
    out.coefficients.partition.push_back(dict.columns_of_class(c));
  }
  return out;
}

inline Vector class_reconstruction_residuals(const Dictionary& dict, const VectorRef& y,
                                             const Vector& coeffs) {
  Vector r(static_cast<Eigen::Index>(dict.class_count()));
  for (std::size_t c = 0; c < dict.class_count(); ++c) {
    const auto& cols = dict.columns_of_class(c);
    r(static_cast<Eigen::Index>(c)) = (y - dict.samples()(Eigen::all, cols) * coeffs(cols)).norm();
  }
  return r;
}

}  // namespace detail

/// CRC with the ridge operator factored once per dictionary.
class CrcClassifier {
 public:
  CrcClassifier() = default;
  CrcClassifier(Dictionary dict, double beta) : dict_(std::move(dict)), ridge_(dict_.samples(), beta) {}

  const Dictionary& dictionary() const { return dict_; }
  double beta() const { return ridge_.lambda(); }

  ClassificationOutcome classify(const VectorRef& y) const {
    detail::check_query(dict_, y);
    Vector rho = ridge_.solve(y);
    Vector res(static_cast<Eigen::Index>(dict_.class_count()));
    bool any = false;
    for (std::size_t c = 0; c < dict_.class_count(); ++c) {
      const auto& cols = dict_.columns_of_class(c);
      const Vector rc = rho(cols);
      const double rn = rc.norm();
      if (rn == 0.0) {
        res(static_cast<Eigen::Index>(c)) = std::numeric_limits<double>::infinity();
        continue;
      }
      any = true;
      res(static_cast<Eigen::Index>(c)) = (y - dict_.samples()(Eigen::all, cols) * rc).norm() / rn;
    }
    if (!any) throw DegenerateQuery("crc: coefficient vector is zero on every class");
    return detail::make_outcome(dict_, std::move(res), std::move(rho));
  }

 private:
  Dictionary dict_;
  RidgeOperator ridge_;
};

inline ClassificationOutcome crc_classify(const Dictionary& dict, const VectorRef& y, double beta) {
  return CrcClassifier(dict, beta).classify(y);
}

struct SrcOptions {
  double lambda = 0.001;
  double admm_rho = 0.01;  // augmented-Lagrangian penalty of the splitting
  double tolerance = 1e-6;
  int max_iter = 10000;
};

/// ||y - X a||^2 + lambda ||a||_1.
inline double lasso_objective(const MatrixRef& x, const VectorRef& y, const VectorRef& a, double lambda) {
  return (y - x * a).squaredNorm() + lambda * a.lpNorm<1>();
}

/// SRC coding by ADMM on the split a = z:
///   a <- (2 X^T X + rho I)^{-1} (2 X^T y + rho (z - u))
///   z <- soft(a + u, lambda / rho)
///   u <- u + a - z
/// stopping when primal ||a - z|| and dual rho ||z - z_prev|| fall below
/// sqrt(n) tol + tol * scale.
class SrcClassifier {
 public:
  SrcClassifier() = default;
  SrcClassifier(Dictionary dict, SrcOptions opts) : dict_(std::move(dict)), opts_(opts) {
    if (!(opts_.lambda > 0.0)) throw ConfigError("src: lambda must be positive");
    if (!(opts_.admm_rho > 0.0)) throw ConfigError("src: admm_rho must be positive");
    if (opts_.max_iter < 1) throw ConfigError("src: max_iter must be positive");
    Matrix sys = 2.0 * dict_.samples().transpose() * dict_.samples();
    sys.diagonal().array() += opts_.admm_rho;
    llt_.compute(sys);
    if (llt_.info() != Eigen::Success) throw SolverError("src: ADMM system not positive definite");
  }

  const Dictionary& dictionary() const { return dict_; }
  const SrcOptions& options() const { return opts_; }

  struct Coding {
    Vector alpha;
    int iterations = 0;
    bool converged = false;
  };

  Coding code(const VectorRef& y) const {
    detail::check_query(dict_, y);
    const Matrix& x = dict_.samples();
    const Eigen::Index n = x.cols();
    const double rho = opts_.admm_rho;
    const double thresh = opts_.lambda / rho;
    const Vector xty2 = 2.0 * (x.transpose() * y);
    const double sqn = std::sqrt(static_cast<double>(n));
    Vector a = Vector::Zero(n), z = Vector::Zero(n), u = Vector::Zero(n);
    Coding out;
    for (int it = 1; it <= opts_.max_iter; ++it) {
      a = llt_.solve(xty2 + rho * (z - u));
      const Vector z_prev = z;
      z = (a + u).unaryExpr([thresh](double v) {
        return v > thresh ? v - thresh : (v < -thresh ? v + thresh : 0.0);
      });
      u += a - z;
      out.iterations = it;
      const double primal = (a - z).norm();
      const double dual = rho * (z - z_prev).norm();
      const double eps_pri = sqn * opts_.tolerance + opts_.tolerance * std::max(a.norm(), z.norm());
      const double eps_dual = sqn * opts_.tolerance + opts_.tolerance * rho * u.norm();
      if (primal <= eps_pri && dual <= eps_dual) {
        out.converged = true;
        break;
      }
    }
    out.alpha = std::move(z);
    return out;
  }

  ClassificationOutcome classify(const VectorRef& y) const {
    Coding c = code(y);
    if (c.alpha.isZero(0.0)) throw DegenerateQuery("src: sparse code is identically zero");
    Vector res = detail::class_reconstruction_residuals(dict_, y, c.alpha);
    ClassificationOutcome out = detail::make_outcome(dict_, std::move(res), std::move(c.alpha));
    out.status = c.converged ? SolveStatus::converged : SolveStatus::max_iterations;
    out.iterations = c.iterations;
    return out;
  }

 private:
  Dictionary dict_;
  SrcOptions opts_;
  Eigen::LLT<Matrix> llt_;
};

inline ClassificationOutcome src_classify(const Dictionary& dict, const VectorRef& y, double lambda) {
  SrcOptions o;
  o.lambda = lambda;
  return SrcClassifier(dict, o).classify(y);
}

/// LRC with per-class pseudo-inverses computed once.
class LrcClassifier {
 public:
  LrcClassifier() = default;
  explicit LrcClassifier(Dictionary dict) : dict_(std::move(dict)) {
    for (std::size_t c = 0; c < dict_.class_count(); ++c) pinvs_.push_back(pinv(dict_.class_block(c)));
  }

  const Dictionary& dictionary() const { return dict_; }

  ClassificationOutcome classify(const VectorRef& y) const {
    detail::check_query(dict_, y);
    Vector coeffs = Vector::Zero(dict_.size());
    Vector res(static_cast<Eigen::Index>(dict_.class_count()));
    for (std::size_t c = 0; c < dict_.class_count(); ++c) {
      const auto& cols = dict_.columns_of_class(c);
      const Vector b = pinvs_[c] * y;
      coeffs(cols) = b;
      res(static_cast<Eigen::Index>(c)) = (y - dict_.samples()(Eigen::all, cols) * b).norm();
    }
    return detail::make_outcome(dict_, std::move(res), std::move(coeffs));
  }

 private:
  Dictionary dict_;
  std::vector<Matrix> pinvs_;
};

inline ClassificationOutcome lrc_classify(const Dictionary& dict, const VectorRef& y) {
  return LrcClassifier(dict).classify(y);
}

/// Nearest column in Euclidean distance. With a normalized dictionary the
/// query is normalized too. Coefficients are the indicator of the winner.
inline ClassificationOutcome nn_classify(const Dictionary& dict, const VectorRef& y_raw) {
  detail::check_query(dict, y_raw);
  Vector y = y_raw;
  if (dict.normalized()) {
    const double nrm = y.norm();
    if (nrm == 0.0) throw DegenerateQuery("nn: zero query cannot be normalized");
    y /= nrm;
  }
  Vector res = Vector::Constant(static_cast<Eigen::Index>(dict.class_count()),
                                std::numeric_limits<double>::infinity());
  std::vector<Eigen::Index> best_col(dict.class_count(), 0);
  for (Eigen::Index j = 0; j < dict.size(); ++j) {
    const double d = (y - dict.samples().col(j)).norm();
    const auto c = static_cast<Eigen::Index>(dict.class_of_column(j));
    if (d < res(c)) {
      res(c) = d;
      best_col[static_cast<std::size_t>(c)] = j;
    }
  }
  const std::size_t winner = detail::argmin_lowest(res);
  Vector coeffs = Vector::Zero(dict.size());
  coeffs(best_col[winner]) = 1.0;
  return detail::make_outcome(dict, std::move(res), std::move(coeffs));
}

}  // namespace dlrr

#endif  // DLRR_CLASSIFIERS_HPP
