#ifndef DLRR_MATRIX_IO_HPP
#define DLRR_MATRIX_IO_HPP

// Binary matrix container:
//
//   offset 0   8 bytes  magic "DLRRMAT1"
//   offset 8   u64 LE   rows
//   offset 16  u64 LE   cols
//   offset 24  rows*cols IEEE-754 binary64 LE values, column-major
//
// A file may hold several containers back to back. Sample matrices are
// stored as a data container followed by a 1 x n container of labels.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dlrr/linalg.hpp"
#include "dlrr/sample_matrix.hpp"

namespace dlrr {

inline constexpr std::array<char, 8> kMatrixMagic = {'D', 'L', 'R', 'R', 'M', 'A', 'T', '1'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("matrix container: truncated header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

}  // namespace detail

inline void write_matrix(std::ostream& os, const MatrixRef& m) {
  os.write(kMatrixMagic.data(), kMatrixMagic.size());
  detail::put_u64(os, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) detail::put_f64(os, m(i, j));
  }
  if (!os) throw DataError("matrix container: write failed");
}

inline Matrix read_matrix(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMatrixMagic) {
    throw DataError("matrix container: bad magic");
  }
  const std::uint64_t rows = detail::get_u64(is);
  const std::uint64_t cols = detail::get_u64(is);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 34;
  if (rows > kLimit || cols > kLimit || (rows != 0 && cols > kLimit / rows)) {
    throw DataError("matrix container: implausible shape " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols * 8));
  if (!buf.empty() && !is.read(reinterpret_cast<char*>(buf.data()),
                               static_cast<std::streamsize>(buf.size()))) {
    throw DataError("matrix container: truncated payload");
  }
  for (std::size_t k = 0; k < rows * cols; ++k) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | buf[k * 8 + static_cast<std::size_t>(b)];
    m.data()[k] = std::bit_cast<double>(v);
  }
  return m;
}

inline void save_matrix(const std::string& path, const MatrixRef& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_matrix(os, m);
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return read_matrix(is);
}

inline void write_samples(std::ostream& os, const SampleMatrix& s) {
  write_matrix(os, s.data);
  Matrix lab(1, s.cols());
  for (Eigen::Index j = 0; j < s.cols(); ++j) lab(0, j) = s.labels[static_cast<std::size_t>(j)];
  write_matrix(os, lab);
}

inline SampleMatrix read_samples(std::istream& is) {
  Matrix data = read_matrix(is);
  Matrix lab = read_matrix(is);
  if (lab.rows() != 1 || lab.cols() != data.cols()) {
    throw DataError("sample file: label row does not match data columns");
  }
  std::vector<int> labels(static_cast<std::size_t>(lab.cols()));
  for (Eigen::Index j = 0; j < lab.cols(); ++j) {
    labels[static_cast<std::size_t>(j)] = static_cast<int>(lab(0, j));
  }
  return SampleMatrix(std::move(data), std::move(labels));
}

inline void save_samples(const std::string& path, const SampleMatrix& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_samples(os, s);
}

inline SampleMatrix load_samples(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return read_samples(is);
}

}  // namespace dlrr

#endif  // DLRR_MATRIX_IO_HPP
