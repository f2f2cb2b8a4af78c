#ifndef DLRR_DATASET_HPP
#define DLRR_DATASET_HPP

// Manifest-driven dataset loading. A manifest is UTF-8 CSV with the header
// `path,label,split`; split is `train` or `test`; relative paths resolve
// against the manifest's directory.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlrr/image_io.hpp"
#include "dlrr/sample_matrix.hpp"

namespace dlrr {

enum class Split { train, test };

struct ManifestEntry {
  std::string path;
  int label = 0;
  Split split = Split::train;
};

struct ImageGeometry {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  Eigen::Index pixels() const { return height * width; }
  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  // Unset means: take the geometry of the first image.
  std::optional<ImageGeometry> geometry;
  // Without it, an image whose size differs from the geometry is an error.
  bool allow_resize = false;

  void validate() const {
    std::set<int> train_labels;
    for (const auto& e : entries) {
      if (e.split == Split::train) train_labels.insert(e.label);
    }
    for (const auto& e : entries) {
      if (!train_labels.count(e.label)) {
        throw DataError("manifest: label " + std::to_string(e.label) +
                        " has no training image");
      }
    }
    if (geometry && (geometry->height <= 0 || geometry->width <= 0)) {
      throw DataError("manifest: geometry must be positive");
    }
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline DatasetManifest parse_manifest(std::istream& is, const std::filesystem::path& base_dir = {}) {
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    for (auto& f : fields) f = detail::trim(f);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"path", "label", "split"}) {
        throw DataError("manifest: header must be 'path,label,split'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw DataError("manifest line " + std::to_string(lineno) + ": expected 3 fields");
    }
    ManifestEntry e;
    std::filesystem::path p(fields[0]);
    e.path = (p.is_relative() && !base_dir.empty()) ? (base_dir / p).string() : p.string();
    try {
      std::size_t used = 0;
      e.label = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument(fields[1]);
    } catch (const std::exception&) {
      throw DataError("manifest line " + std::to_string(lineno) + ": bad label '" + fields[1] + "'");
    }
    if (fields[2] == "train") {
      e.split = Split::train;
    } else if (fields[2] == "test") {
      e.split = Split::test;
    } else {
      throw DataError("manifest line " + std::to_string(lineno) + ": split must be train or test");
    }
    m.entries.push_back(std::move(e));
  }
  if (!header_seen) throw DataError("manifest: empty file");
  return m;
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest " + path);
  return parse_manifest(is, std::filesystem::path(path).parent_path());
}

struct LoadedDataset {
  SampleMatrix train;
  SampleMatrix test;
  ImageGeometry geometry;
  bool test_empty() const { return test.empty(); }
};

inline LoadedDataset load_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  if (manifest.entries.empty()) throw DataError("manifest has no entries");
  LoadedDataset out;
  std::optional<ImageGeometry> geom = manifest.geometry;
  std::vector<Vector> train_cols, test_cols;
  std::vector<int> train_labels, test_labels;
  for (const auto& e : manifest.entries) {
    Image img = read_image(e.path);
    const ImageGeometry got{img.rows(), img.cols()};
    if (!geom) geom = got;
    if (got != *geom) {
      if (!manifest.allow_resize) {
        throw DataError(e.path + ": image is " + shape_str(got.height, got.width) +
                        ", expected " + shape_str(geom->height, geom->width));
      }
      img = resize_bilinear(img, geom->height, geom->width);
    }
    if (e.split == Split::train) {
      train_cols.push_back(vectorize(img));
      train_labels.push_back(e.label);
    } else {
      test_cols.push_back(vectorize(img));
      test_labels.push_back(e.label);
    }
  }
  auto assemble = [&](const std::vector<Vector>& cols, std::vector<int> labels) {
    Matrix m(geom->pixels(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = cols[j];
    return SampleMatrix(std::move(m), std::move(labels));
  };
  out.geometry = *geom;
  out.train = assemble(train_cols, std::move(train_labels));
  out.test = assemble(test_cols, std::move(test_labels));
  return out;
}

}  // namespace dlrr

#endif  // DLRR_DATASET_HPP
