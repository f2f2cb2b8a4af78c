#ifndef DLRR_CORRUPTION_HPP
#define DLRR_CORRUPTION_HPP

// Artificial corruption of a subset of samples: random-valued pixels or a
// square occluding block per chosen image.

#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dlrr/dataset.hpp"
#include "dlrr/image_io.hpp"
#include "dlrr/sample_matrix.hpp"

namespace dlrr {

enum class CorruptionKind { pixel, block };

inline std::string to_string(CorruptionKind k) { return k == CorruptionKind::pixel ? "pixel" : "block"; }

inline CorruptionKind parse_corruption_kind(const std::string& s) {
  if (s == "pixel") return CorruptionKind::pixel;
  if (s == "block") return CorruptionKind::block;
  throw ConfigError("corruption kind must be 'pixel' or 'block', got '" + s + "'");
}

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::pixel;
  double sample_fraction = 0.1;   // share of columns corrupted, rounded up
  double per_image_extent = 0.1;  // pixel share, or block side / image side
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(sample_fraction >= 0.0 && sample_fraction <= 1.0)) {
      throw ConfigError("corruption: sample_fraction must lie in [0, 1]");
    }
    if (!(per_image_extent > 0.0 && per_image_extent <= 1.0)) {
      throw ConfigError("corruption: per_image_extent must lie in (0, 1]");
    }
  }
};

/// ceil(fraction * n), immune to representation error such as 0.1 * 30.
inline Eigen::Index ceil_count(double fraction, Eigen::Index n) {
  const double raw = fraction * static_cast<double>(n);
  const double r = std::round(raw);
  if (std::abs(raw - r) < 1e-9) return static_cast<Eigen::Index>(r);
  return static_cast<Eigen::Index>(std::ceil(raw));
}

/// Side length of a square block for the given extent.
inline Eigen::Index block_side(double extent, const ImageGeometry& g) {
  const auto side = static_cast<Eigen::Index>(
      std::lround(extent * static_cast<double>(std::min(g.height, g.width))));
  return std::clamp<Eigen::Index>(side, 1, std::min(g.height, g.width));
}

/// Default occluder: a checkerboard of 0/1 cells, four cells per side.
inline Image checkerboard(Eigen::Index side) {
  const Eigen::Index cell = std::max<Eigen::Index>(1, side / 4);
  Image img(side, side);
  for (Eigen::Index r = 0; r < side; ++r) {
    for (Eigen::Index c = 0; c < side; ++c) img(r, c) = ((r / cell + c / cell) % 2) ? 1.0 : 0.0;
  }
  return img;
}

struct CorruptionResult {
  SampleMatrix samples;
  std::vector<Eigen::Index> corrupted_columns;  // ascending
};

namespace detail {

/// First k entries of a seeded Fisher-Yates shuffle of 0..n-1.
inline std::vector<Eigen::Index> choose_k(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace detail

inline CorruptionResult corrupt_detailed(const SampleMatrix& x, const CorruptionSpec& spec,
                                         const ImageGeometry& geometry,
                                         const std::optional<Image>& occluder = std::nullopt) {
  spec.validate();
  x.validate();
  if (geometry.pixels() != x.rows()) {
    throw DataError("corrupt: geometry " + shape_str(geometry.height, geometry.width) +
                    " does not match sample length " + std::to_string(x.rows()));
  }
  std::mt19937_64 rng(spec.rng_seed);
  CorruptionResult out{x, {}};
  const Eigen::Index n = x.cols();
  const Eigen::Index m = x.rows();
  out.corrupted_columns = detail::choose_k(n, ceil_count(spec.sample_fraction, n), rng);
  std::sort(out.corrupted_columns.begin(), out.corrupted_columns.end());

  if (spec.kind == CorruptionKind::pixel) {
    const Eigen::Index k = std::max<Eigen::Index>(1, ceil_count(spec.per_image_extent, m));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index j : out.corrupted_columns) {
      for (Eigen::Index p : detail::choose_k(m, k, rng)) out.samples.data(p, j) = unit(rng);
    }
  } else {
    const Eigen::Index side = block_side(spec.per_image_extent, geometry);
    const Image patch = occluder ? resize_bilinear(*occluder, side, side) : checkerboard(side);
    std::uniform_int_distribution<Eigen::Index> top_pick(0, geometry.height - side);
    std::uniform_int_distribution<Eigen::Index> left_pick(0, geometry.width - side);
    for (Eigen::Index j : out.corrupted_columns) {
      const Eigen::Index top = top_pick(rng);
      const Eigen::Index left = left_pick(rng);
      for (Eigen::Index c = 0; c < side; ++c) {
        for (Eigen::Index r = 0; r < side; ++r) {
          out.samples.data((left + c) * geometry.height + top + r, j) = patch(r, c);
        }
      }
    }
  }
  return out;
}

inline SampleMatrix corrupt(const SampleMatrix& x, const CorruptionSpec& spec,
                            const ImageGeometry& geometry,
                            const std::optional<Image>& occluder = std::nullopt) {
  return corrupt_detailed(x, spec, geometry, occluder).samples;
}

}  // namespace dlrr

#endif  // DLRR_CORRUPTION_HPP
