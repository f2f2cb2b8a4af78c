#ifndef DLRR_SYNTHETIC_HPP
#define DLRR_SYNTHETIC_HPP

#include <random>

#include "dlrr/sample_matrix.hpp"

namespace dlrr {

struct SynthParams {
  int classes = 3;
  int ambient_dim = 100;
  int rank = 2;
  int per_class = 20;
  // Gaussian perturbation with expected per-column l2 norm `noise`
  // (entries have standard deviation noise / sqrt(ambient_dim)).
  double noise = 0.0;
  std::uint64_t rng_seed = 0;
  // Draw all class bases from one orthonormal frame, making the class
  // subspaces mutually orthogonal. Needs classes * rank <= ambient_dim.
  bool orthogonal_subspaces = false;

  void validate() const {
    if (classes < 1) throw ConfigError("synth: classes must be positive");
    if (rank < 1 || rank >= ambient_dim) throw ConfigError("synth: need 1 <= rank < ambient_dim");
    if (per_class <= rank) throw ConfigError("synth: per_class must exceed rank");
    if (!(noise >= 0.0)) throw ConfigError("synth: noise must be nonnegative");
    if (orthogonal_subspaces && classes * rank > ambient_dim) {
      throw ConfigError("synth: orthogonal subspaces need classes * rank <= ambient_dim");
    }
  }
};

struct SynthData {
  SampleMatrix observed;
  Matrix clean;  // ground truth, same shape and column order as observed
  std::vector<Matrix> bases;  // per class, ambient_dim x rank, orthonormal
};

namespace detail {

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  }
  return m;
}

inline Matrix orthonormal_columns(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

}  // namespace detail

/// Union-of-subspaces data: class c occupies columns c*per_class .. and
/// carries label c + 1. Clean columns have unit norm.
inline SynthData synth_multisubspace(const SynthParams& p) {
  p.validate();
  std::mt19937_64 rng(p.rng_seed);
  const Eigen::Index m = p.ambient_dim;
  const Eigen::Index n = static_cast<Eigen::Index>(p.classes) * p.per_class;
  SynthData out;
  if (p.orthogonal_subspaces) {
    const Matrix frame = detail::orthonormal_columns(
        detail::gaussian(m, static_cast<Eigen::Index>(p.classes) * p.rank, rng));
    for (int c = 0; c < p.classes; ++c) {
      out.bases.push_back(frame.middleCols(static_cast<Eigen::Index>(c) * p.rank, p.rank));
    }
  } else {
    for (int c = 0; c < p.classes; ++c) {
      out.bases.push_back(detail::orthonormal_columns(detail::gaussian(m, p.rank, rng)));
    }
  }
  out.clean.resize(m, n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int c = 0; c < p.classes; ++c) {
    const Matrix coeff = detail::gaussian(p.rank, p.per_class, rng);
    for (int k = 0; k < p.per_class; ++k) {
      const Eigen::Index j = static_cast<Eigen::Index>(c) * p.per_class + k;
      Vector col = out.bases[static_cast<std::size_t>(c)] * coeff.col(k);
      out.clean.col(j) = col / col.norm();
      labels[static_cast<std::size_t>(j)] = c + 1;
    }
  }
  Matrix observed = out.clean;
  if (p.noise > 0.0) {
    observed += (p.noise / std::sqrt(static_cast<double>(m))) * detail::gaussian(m, n, rng);
  }
  out.observed = SampleMatrix(std::move(observed), std::move(labels));
  return out;
}

/// Affine map of unit-norm columns onto an image-like intensity range:
/// every entry becomes mean + pixel_std * sqrt(m) * v, so a unit column
/// gets per-pixel RMS deviation pixel_std around `mean`.
inline void to_intensities(Matrix& data, double mean, double pixel_std) {
  const double scale = pixel_std * std::sqrt(static_cast<double>(data.rows()));
  data = (mean + scale * data.array()).matrix();
}

}  // namespace dlrr

#endif  // DLRR_SYNTHETIC_HPP
