#ifndef DLRR_IMAGE_IO_HPP
#define DLRR_IMAGE_IO_HPP

// Grayscale image decoding. PGM (P2 ASCII and P5 binary) is always
// available; PNG needs libpng and the DLRR_HAVE_PNG definition.

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dlrr/linalg.hpp"

#ifdef DLRR_HAVE_PNG
#include <png.h>
#endif

namespace dlrr {

#ifdef DLRR_HAVE_PNG
inline constexpr bool kPngSupported = true;
#else
inline constexpr bool kPngSupported = false;
#endif

/// Intensities scaled to [0, 1]; pixel (r, c) is at (r, c).
using Image = Matrix;

namespace detail {

inline std::string next_pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline long parse_pnm_int(std::istream& is, const std::string& path) {
  const std::string tok = next_pnm_token(is);
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ": malformed PGM header token '" + tok + "'");
  }
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
  if (s.size() < suf.size()) return false;
  for (std::size_t i = 0; i < suf.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suf.size() + i])) != suf[i]) return false;
  }
  return true;
}

}  // namespace detail

inline Image read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open image " + path);
  const std::string magic = detail::next_pnm_token(is);
  if (magic != "P2" && magic != "P5") throw DataError(path + ": not a PGM file");
  const long w = detail::parse_pnm_int(is, path);
  const long h = detail::parse_pnm_int(is, path);
  const long maxval = detail::parse_pnm_int(is, path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw DataError(path + ": invalid PGM geometry or maxval");
  }
  Image img(h, w);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        const long v = detail::parse_pnm_int(is, path);
        if (v > maxval) throw DataError(path + ": pixel exceeds maxval");
        img(r, c) = static_cast<double>(v) * scale;
      }
    }
  } else {
    // Exactly one whitespace byte separates maxval from the raster; the
    // tokenizer has already consumed it.
    const int bpp = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(static_cast<std::size_t>(w * h * bpp));
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw DataError(path + ": truncated PGM raster");
    }
    std::size_t k = 0;
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        long v = buf[k++];
        if (bpp == 2) v = (v << 8) | buf[k++];
        if (v > maxval) throw DataError(path + ": pixel exceeds maxval");
        img(r, c) = static_cast<double>(v) * scale;
      }
    }
  }
  return img;
}

/// Writes an 8-bit binary PGM; values are clamped to [0, 1].
inline void write_pgm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  if (!os) throw DataError("write failed for " + path);
}

#ifdef DLRR_HAVE_PNG
inline Image read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError(path + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError(path + ": " + image.message);
  }
  Image img(image.height, image.width);
  for (png_uint_32 r = 0; r < image.height; ++r) {
    for (png_uint_32 c = 0; c < image.width; ++c) {
      img(r, c) = buf[r * image.width + c] / 255.0;
    }
  }
  return img;
}
#endif

inline Image read_image(const std::string& path) {
  if (detail::has_suffix(path, ".pgm")) return read_pgm(path);
  if (detail::has_suffix(path, ".png")) {
#ifdef DLRR_HAVE_PNG
    return read_png(path);
#else
    throw DataError(path + ": PNG decoding not available in this build");
#endif
  }
  throw DataError(path + ": unsupported image format (expected .pgm or .png)");
}

/// Bilinear resampling onto a height x width grid (pixel-center aligned).
inline Image resize_bilinear(const Image& src, Eigen::Index height, Eigen::Index width) {
  if (src.rows() == height && src.cols() == width) return src;
  Image out(height, width);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(height);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(width);
  for (Eigen::Index r = 0; r < height; ++r) {
    const double fy = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(src.rows() - 1));
    const auto y0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index y1 = std::min(y0 + 1, src.rows() - 1);
    const double ty = fy - static_cast<double>(y0);
    for (Eigen::Index c = 0; c < width; ++c) {
      const double fx = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(src.cols() - 1));
      const auto x0 = static_cast<Eigen::Index>(fx);
      const Eigen::Index x1 = std::min(x0 + 1, src.cols() - 1);
      const double tx = fx - static_cast<double>(x0);
      out(r, c) = (1 - ty) * ((1 - tx) * src(y0, x0) + tx * src(y0, x1)) +
                  ty * ((1 - tx) * src(y1, x0) + tx * src(y1, x1));
    }
  }
  return out;
}

/// Column-major vectorization: pixel (r, c) lands at index c * height + r.
inline Vector vectorize(const Image& img) {
  return Eigen::Map<const Vector>(img.data(), img.size());
}

inline Image unvectorize(const VectorRef& v, Eigen::Index height, Eigen::Index width) {
  if (v.size() != height * width) throw DataError("unvectorize: length does not match geometry");
  return Eigen::Map<const Matrix>(v.data(), height, width);
}

}  // namespace dlrr

#endif  // DLRR_IMAGE_IO_HPP
