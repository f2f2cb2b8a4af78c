#ifndef DLRR_SAMPLE_MATRIX_HPP
#define DLRR_SAMPLE_MATRIX_HPP

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "dlrr/linalg.hpp"

namespace dlrr {

/// Column-major collection of vectorized samples, one class label per column.
struct SampleMatrix {
  Matrix data;
  std::vector<int> labels;

  SampleMatrix() = default;
  SampleMatrix(Matrix d, std::vector<int> l) : data(std::move(d)), labels(std::move(l)) {
    validate();
  }

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
  bool empty() const { return data.cols() == 0; }

  void validate() const {
    if (static_cast<Eigen::Index>(labels.size()) != data.cols()) {
      throw DataError("sample matrix has " + std::to_string(data.cols()) +
                      " columns but " + std::to_string(labels.size()) + " labels");
    }
    require_finite(data, "sample matrix");
  }

  /// Distinct labels, ascending.
  std::vector<int> classes() const {
    std::vector<int> c(labels);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
  }

  std::vector<Eigen::Index> columns_of(int label) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] == label) idx.push_back(static_cast<Eigen::Index>(j));
    }
    return idx;
  }

  Matrix block(int label) const { return data(Eigen::all, columns_of(label)); }

  SampleMatrix select(const std::vector<Eigen::Index>& cols_idx) const {
    SampleMatrix out;
    out.data = data(Eigen::all, cols_idx);
    out.labels.reserve(cols_idx.size());
    for (auto j : cols_idx) out.labels.push_back(labels[static_cast<std::size_t>(j)]);
    return out;
  }
};

}  // namespace dlrr

#endif  // DLRR_SAMPLE_MATRIX_HPP
