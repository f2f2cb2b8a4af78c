#ifndef DLRR_EXPERIMENT_HPP
#define DLRR_EXPERIMENT_HPP

// Benchmark harness: data preparation (synthetic, manifest or sample files),
// optional corruption of train and/or test samples, and a methods x dims x
// seeds sweep with per-cell failure capture. Results are written as CSV.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dlrr/corruption.hpp"
#include "dlrr/dataset.hpp"
#include "dlrr/kv_config.hpp"
#include "dlrr/matrix_io.hpp"
#include "dlrr/pipeline.hpp"
#include "dlrr/synthetic.hpp"

namespace dlrr {

enum class DataSource { synthetic, manifest, samples };

enum class SplitProtocol { given, random, ar_sunglasses, ar_scarf, ar_sunglasses_scarf };

inline SplitProtocol parse_split_protocol(const std::string& s) {
  if (s == "given") return SplitProtocol::given;
  if (s == "random") return SplitProtocol::random;
  if (s == "ar-sunglasses") return SplitProtocol::ar_sunglasses;
  if (s == "ar-scarf") return SplitProtocol::ar_scarf;
  if (s == "ar-sunglasses-scarf") return SplitProtocol::ar_sunglasses_scarf;
  throw ConfigError("unknown split protocol '" + s + "'");
}

inline bool is_ar_protocol(SplitProtocol p) {
  return p == SplitProtocol::ar_sunglasses || p == SplitProtocol::ar_scarf ||
         p == SplitProtocol::ar_sunglasses_scarf;
}

// AR face database layout: 26 images per subject, indices 1-13 from the
// first session and 14-26 from the second. Within a session the first 7 are
// unoccluded, the next 3 wear sunglasses and the last 3 a scarf.
struct ArSplit {
  std::set<int> train;
  std::set<int> test;
};

inline ArSplit ar_split(SplitProtocol p) {
  const std::set<int> clean1 = {1, 2, 3, 4, 5, 6, 7};
  const std::set<int> clean2 = {14, 15, 16, 17, 18, 19, 20};
  ArSplit s{clean1, clean2};
  switch (p) {
    case SplitProtocol::ar_sunglasses:
      s.train.insert(8);
      s.test.insert({9, 10, 21, 22, 23});
      break;
    case SplitProtocol::ar_scarf:
      s.train.insert(11);
      s.test.insert({12, 13, 24, 25, 26});
      break;
    case SplitProtocol::ar_sunglasses_scarf:
      s.train.insert({8, 11});
      s.test.insert({9, 10, 12, 13, 21, 22, 23, 24, 25, 26});
      break;
    default: throw ConfigError("not an AR protocol");
  }
  return s;
}

/// Image index within the subject: the last run of digits in the file stem
/// ("m-001-08.pgm" -> 8).
inline int ar_image_index(const std::string& path) {
  const std::string stem = std::filesystem::path(path).stem().string();
  auto end = stem.find_last_of("0123456789");
  if (end == std::string::npos) throw DataError(path + ": no image index in file name");
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  const int idx = std::stoi(stem.substr(begin, end - begin + 1));
  if (idx < 1 || idx > 26) throw DataError(path + ": AR image index " + std::to_string(idx) + " outside 1..26");
  return idx;
}

/// Accuracies (%) reported for the AR occlusion protocols, dims 25..300.
inline std::optional<double> ar_reference_accuracy(SplitProtocol p, Method m, Eigen::Index dim) {
  static const std::vector<Eigen::Index> dims = {25, 50, 75, 100, 200, 300};
  using Row = std::array<double, 6>;
  static const std::map<Method, Row> sunglasses = {
      {Method::dlrr_cr, {65.58, 82.00, 87.33, 90.00, 92.00, 91.75}},
      {Method::lrr_cr, {61.25, 81.58, 87.50, 89.50, 90.67, 90.58}},
      {Method::lrr_crc, {54.75, 75.67, 83.08, 86.67, 91.33, 92.08}},
      {Method::crc, {52.08, 73.67, 80.25, 84.67, 89.25, 90.50}},
      {Method::src, {56.67, 71.83, 75.67, 77.92, 82.25, 84.00}},
      {Method::lrc, {57.50, 68.08, 70.50, 71.75, 73.67, 73.92}},
      {Method::nn, {45.17, 51.00, 53.17, 54.58, 56.92, 57.17}}};
  static const std::map<Method, Row> scarf = {
      {Method::dlrr_cr, {58.25, 84.75, 88.50, 90.83, 91.58, 91.83}},
      {Method::lrr_cr, {53.50, 82.58, 87.75, 89.25, 89.67, 89.50}},
      {Method::lrr_crc, {46.08, 76.17, 83.33, 86.25, 90.67, 90.75}},
      {Method::crc, {45.08, 72.25, 80.50, 84.75, 90.00, 90.33}},
      {Method::src, {51.42, 66.25, 70.75, 74.75, 79.17, 80.58}},
      {Method::lrc, {56.42, 65.67, 68.08, 70.00, 70.58, 70.50}},
      {Method::nn, {39.75, 45.42, 47.00, 48.83, 50.50, 50.75}}};
  static const std::map<Method, Row> both = {
      {Method::dlrr_cr, {55.82, 81.53, 87.06, 88.59, 90.65, 90.29}},
      {Method::lrr_cr, {53.82, 78.29, 85.53, 88.00, 88.82, 88.53}},
      {Method::lrr_crc, {45.65, 72.76, 80.29, 85.53, 89.71, 90.12}},
      {Method::crc, {42.94, 69.29, 78.35, 82.12, 88.18, 89.53}},
      {Method::src, {51.06, 66.00, 70.88, 73.65, 78.06, 80.47}},
      {Method::lrc, {53.53, 64.71, 68.35, 69.41, 70.94, 70.76}},
      {Method::nn, {35.47, 40.65, 42.65, 44.12, 46.41, 47.06}}};
  const std::map<Method, Row>* table = nullptr;
  if (p == SplitProtocol::ar_sunglasses) table = &sunglasses;
  if (p == SplitProtocol::ar_scarf) table = &scarf;
  if (p == SplitProtocol::ar_sunglasses_scarf) table = &both;
  if (!table) return std::nullopt;
  auto row = table->find(m);
  if (row == table->end()) return std::nullopt;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k] == dim) return row->second[k];
  }
  return std::nullopt;
}

struct SyntheticSource {
  SynthParams params;  // per_class and rng_seed are set per run
  Eigen::Index height = 10;
  Eigen::Index width = 10;
  int train_per_class = 20;
  int test_per_class = 10;
  // Map unit-norm columns to intensities mean + deviation (see to_intensities).
  bool intensities = false;
  double intensity_mean = 0.5;
  double intensity_std = 0.15;
};

struct CorruptionPlan {
  bool enabled = false;
  CorruptionSpec spec;  // rng_seed is derived per run
  bool train = true;
  bool test = true;
  std::string occluder_path;
};

struct ExperimentConfig {
  DataSource source = DataSource::synthetic;
  std::string manifest_path;
  std::string train_path;
  std::string test_path;
  std::optional<ImageGeometry> geometry;
  bool allow_resize = false;
  SplitProtocol split = SplitProtocol::given;
  int split_train_per_class = 0;

  SyntheticSource synthetic;
  CorruptionPlan corruption;

  std::vector<Method> methods;
  std::vector<Eigen::Index> dims;
  std::vector<std::uint64_t> seeds;

  SolverConfig solver;
  std::map<Eigen::Index, double> lambda_per_dim;
  double beta = 1.1;
  double src_lambda = 0.001;
  DictionarySource dictionary_source = DictionarySource::original;

  double lambda_for(Eigen::Index dim) const {
    auto it = lambda_per_dim.find(dim);
    return it == lambda_per_dim.end() ? solver.lambda : it->second;
  }

  void validate() const {
    if (methods.empty()) throw ConfigError("experiment: at least one method required");
    if (dims.empty()) throw ConfigError("experiment: at least one dim required");
    if (seeds.empty()) throw ConfigError("experiment: at least one seed required");
    for (auto d : dims) {
      if (d < 1) throw ConfigError("experiment: dims must be positive");
    }
    solver.validate();
    for (const auto& [d, l] : lambda_per_dim) {
      if (!(l > 0.0)) throw ConfigError("experiment: per-dim lambda must be positive");
    }
    if (!(beta > 0.0)) throw ConfigError("experiment: beta must be positive");
    if (!(src_lambda > 0.0)) throw ConfigError("experiment: src_lambda must be positive");
    if (corruption.enabled) corruption.spec.validate();
    switch (source) {
      case DataSource::synthetic:
        synthetic.params.validate();
        if (synthetic.params.ambient_dim != synthetic.height * synthetic.width) {
          throw ConfigError("synthetic: height * width must equal the ambient dimension");
        }
        if (synthetic.train_per_class < 1 || synthetic.test_per_class < 0) {
          throw ConfigError("synthetic: invalid per-class counts");
        }
        break;
      case DataSource::manifest:
        if (manifest_path.empty()) throw ConfigError("data.manifest is required for source = manifest");
        break;
      case DataSource::samples:
        if (train_path.empty()) throw ConfigError("data.train is required for source = samples");
        if (is_ar_protocol(split)) throw ConfigError("AR protocols need source = manifest");
        break;
    }
    if (split == SplitProtocol::random && split_train_per_class < 1) {
      throw ConfigError("data.train_per_class must be positive for split = random");
    }
  }
};

inline ExperimentConfig read_experiment_config(KvConfig& kv) {
  ExperimentConfig c;
  const std::string src = kv.take_string("data.source", "synthetic");
  if (src == "synthetic") {
    c.source = DataSource::synthetic;
  } else if (src == "manifest") {
    c.source = DataSource::manifest;
  } else if (src == "samples") {
    c.source = DataSource::samples;
  } else {
    throw ConfigError("data.source must be synthetic, manifest or samples");
  }
  c.manifest_path = kv.take_string("data.manifest", "");
  c.train_path = kv.take_string("data.train", "");
  c.test_path = kv.take_string("data.test", "");
  const long h = kv.take_int("data.height", 0);
  const long w = kv.take_int("data.width", 0);
  if ((h > 0) != (w > 0)) throw ConfigError("data.height and data.width go together");
  if (h > 0) c.geometry = ImageGeometry{h, w};
  c.allow_resize = kv.take_bool("data.allow_resize", false);
  c.split = parse_split_protocol(kv.take_string("data.split", "given"));
  c.split_train_per_class = static_cast<int>(kv.take_int("data.train_per_class", 0));

  auto& s = c.synthetic;
  s.params.classes = static_cast<int>(kv.take_int("synthetic.classes", s.params.classes));
  s.height = kv.take_int("synthetic.height", s.height);
  s.width = kv.take_int("synthetic.width", s.width);
  s.params.ambient_dim = static_cast<int>(s.height * s.width);
  s.params.rank = static_cast<int>(kv.take_int("synthetic.rank", s.params.rank));
  s.train_per_class = static_cast<int>(kv.take_int("synthetic.train_per_class", s.train_per_class));
  s.test_per_class = static_cast<int>(kv.take_int("synthetic.test_per_class", s.test_per_class));
  s.params.per_class = s.train_per_class + s.test_per_class;
  s.params.noise = kv.take_double("synthetic.noise", s.params.noise);
  s.params.orthogonal_subspaces = kv.take_bool("synthetic.orthogonal", false);
  s.intensities = kv.take_bool("synthetic.intensities", false);
  s.intensity_mean = kv.take_double("synthetic.intensity_mean", s.intensity_mean);
  s.intensity_std = kv.take_double("synthetic.intensity_std", s.intensity_std);

  const std::string kind = kv.take_string("corruption.kind", "none");
  if (kind != "none") {
    c.corruption.enabled = true;
    c.corruption.spec.kind = parse_corruption_kind(kind);
    c.corruption.spec.sample_fraction = kv.take_double("corruption.sample_fraction", 0.1);
    c.corruption.spec.per_image_extent = kv.take_double("corruption.per_image_extent", -1.0);
    if (c.corruption.spec.per_image_extent < 0.0) {
      throw ConfigError("corruption.per_image_extent is required when corruption is enabled");
    }
    c.corruption.occluder_path = kv.take_string("corruption.occluder", "");
    const auto targets = kv.take_list("corruption.targets", {"train", "test"});
    c.corruption.train = c.corruption.test = false;
    for (const auto& t : targets) {
      if (t == "train") {
        c.corruption.train = true;
      } else if (t == "test") {
        c.corruption.test = true;
      } else {
        throw ConfigError("corruption.targets entries must be train or test");
      }
    }
  } else {
    for (const char* k : {"corruption.sample_fraction", "corruption.per_image_extent",
                          "corruption.occluder", "corruption.targets"}) {
      if (kv.has(k)) throw ConfigError(std::string(k) + " given but corruption.kind = none");
    }
  }

  for (const auto& m : kv.take_list("experiment.methods", {"dlrr-cr"})) c.methods.push_back(parse_method(m));
  for (const auto& d : kv.take_list("experiment.dims", {"25", "50", "75", "100", "200", "300"})) {
    c.dims.push_back(KvConfig::to_int("experiment.dims", d));
  }
  for (const auto& sd : kv.take_list("experiment.seeds", {"1", "2", "3", "4", "5"})) {
    const long v = KvConfig::to_int("experiment.seeds", sd);
    if (v < 0) throw ConfigError("experiment.seeds must be nonnegative");
    c.seeds.push_back(static_cast<std::uint64_t>(v));
  }

  c.solver = read_solver_config(kv);
  for (const auto& item : kv.take_list("solver.lambda_per_dim", {})) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("solver.lambda_per_dim entries look like dim:lambda");
    c.lambda_per_dim[KvConfig::to_int("solver.lambda_per_dim", KvConfig::trim(item.substr(0, colon)))] =
        KvConfig::to_double("solver.lambda_per_dim", KvConfig::trim(item.substr(colon + 1)));
  }
  c.beta = kv.take_double("classifier.beta", c.beta);
  c.src_lambda = kv.take_double("classifier.src_lambda", c.src_lambda);
  c.dictionary_source = parse_dictionary_source(kv.take_string("classifier.dictionary_source", "original"));
  kv.reject_unknown();
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  KvConfig kv = KvConfig::load(path);
  return read_experiment_config(kv);
}

/// Independent stream seed for (run seed, purpose).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + stream * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct PreparedData {
  SampleMatrix train;
  SampleMatrix test;
  std::optional<ImageGeometry> geometry;
};

/// Everything loaded from disk once and split per seed.
struct DataPool {
  SampleMatrix all;
  std::vector<Split> given_split;
  std::vector<int> ar_index;  // filled for AR protocols
  std::optional<ImageGeometry> geometry;
};

inline DataPool load_pool(const ExperimentConfig& cfg) {
  DataPool pool;
  pool.geometry = cfg.geometry;
  if (cfg.source == DataSource::manifest) {
    DatasetManifest man = load_manifest(cfg.manifest_path);
    if (cfg.geometry) man.geometry = cfg.geometry;
    man.allow_resize = cfg.allow_resize;
    if (is_ar_protocol(cfg.split)) {
      // The AR protocols choose the split themselves.
      for (auto& e : man.entries) e.split = Split::train;
    }
    LoadedDataset ds = load_dataset(man);
    pool.geometry = ds.geometry;
    pool.all.data.resize(ds.train.rows(), ds.train.cols() + ds.test.cols());
    pool.all.data.leftCols(ds.train.cols()) = ds.train.data;
    pool.all.data.rightCols(ds.test.cols()) = ds.test.data;
    pool.all.labels = ds.train.labels;
    pool.all.labels.insert(pool.all.labels.end(), ds.test.labels.begin(), ds.test.labels.end());
    pool.given_split.assign(static_cast<std::size_t>(ds.train.cols()), Split::train);
    pool.given_split.insert(pool.given_split.end(), static_cast<std::size_t>(ds.test.cols()), Split::test);
    if (is_ar_protocol(cfg.split)) {
      for (const auto& e : man.entries) pool.ar_index.push_back(ar_image_index(e.path));
    }
  } else if (cfg.source == DataSource::samples) {
    SampleMatrix tr = load_samples(cfg.train_path);
    SampleMatrix te = cfg.test_path.empty() ? SampleMatrix(Matrix(tr.rows(), 0), {}) : load_samples(cfg.test_path);
    if (te.rows() != tr.rows()) throw DataError("train and test sample files differ in row count");
    pool.all.data.resize(tr.rows(), tr.cols() + te.cols());
    pool.all.data.leftCols(tr.cols()) = tr.data;
    pool.all.data.rightCols(te.cols()) = te.data;
    pool.all.labels = tr.labels;
    pool.all.labels.insert(pool.all.labels.end(), te.labels.begin(), te.labels.end());
    pool.given_split.assign(static_cast<std::size_t>(tr.cols()), Split::train);
    pool.given_split.insert(pool.given_split.end(), static_cast<std::size_t>(te.cols()), Split::test);
  }
  return pool;
}

inline PreparedData split_pool(const ExperimentConfig& cfg, const DataPool& pool, std::uint64_t seed) {
  std::vector<Eigen::Index> tr, te;
  const auto n = pool.all.cols();
  if (cfg.split == SplitProtocol::given) {
    for (Eigen::Index j = 0; j < n; ++j) {
      (pool.given_split[static_cast<std::size_t>(j)] == Split::train ? tr : te).push_back(j);
    }
  } else if (cfg.split == SplitProtocol::random) {
    std::mt19937_64 rng(derive_seed(seed, 3));
    for (int label : pool.all.classes()) {
      std::vector<Eigen::Index> cols = pool.all.columns_of(label);
      if (static_cast<int>(cols.size()) <= cfg.split_train_per_class) {
        throw DataError("class " + std::to_string(label) + " has too few samples for the random split");
      }
      std::shuffle(cols.begin(), cols.end(), rng);
      tr.insert(tr.end(), cols.begin(), cols.begin() + cfg.split_train_per_class);
      te.insert(te.end(), cols.begin() + cfg.split_train_per_class, cols.end());
    }
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
  } else {
    const ArSplit s = ar_split(cfg.split);
    std::map<int, std::pair<std::size_t, std::size_t>> counts;
    for (Eigen::Index j = 0; j < n; ++j) {
      const int idx = pool.ar_index[static_cast<std::size_t>(j)];
      const int label = pool.all.labels[static_cast<std::size_t>(j)];
      if (s.train.count(idx)) {
        tr.push_back(j);
        ++counts[label].first;
      } else if (s.test.count(idx)) {
        te.push_back(j);
        ++counts[label].second;
      }
    }
    for (const auto& [label, ct] : counts) {
      if (ct.first != s.train.size() || ct.second != s.test.size()) {
        throw DataError("AR subject " + std::to_string(label) + " has " + std::to_string(ct.first) + "/" +
                        std::to_string(ct.second) + " train/test images, expected " +
                        std::to_string(s.train.size()) + "/" + std::to_string(s.test.size()));
      }
    }
  }
  return PreparedData{pool.all.select(tr), pool.all.select(te), pool.geometry};
}

inline PreparedData prepare_data(const ExperimentConfig& cfg, const DataPool& pool, std::uint64_t seed) {
  PreparedData d;
  if (cfg.source == DataSource::synthetic) {
    const auto& s = cfg.synthetic;
    SynthParams p = s.params;
    p.rng_seed = derive_seed(seed, 0);
    SynthData sd = synth_multisubspace(p);
    if (s.intensities) to_intensities(sd.observed.data, s.intensity_mean, s.intensity_std);
    std::vector<Eigen::Index> tr, te;
    for (int c = 0; c < p.classes; ++c) {
      for (int k = 0; k < p.per_class; ++k) {
        (k < s.train_per_class ? tr : te).push_back(static_cast<Eigen::Index>(c) * p.per_class + k);
      }
    }
    d.train = sd.observed.select(tr);
    d.test = sd.observed.select(te);
    d.geometry = ImageGeometry{s.height, s.width};
  } else {
    d = split_pool(cfg, pool, seed);
  }
  if (cfg.corruption.enabled) {
    if (!d.geometry) throw ConfigError("corruption needs data.height and data.width");
    std::optional<Image> occluder;
    if (!cfg.corruption.occluder_path.empty()) occluder = read_image(cfg.corruption.occluder_path);
    CorruptionSpec spec = cfg.corruption.spec;
    if (cfg.corruption.train) {
      spec.rng_seed = derive_seed(seed, 1);
      d.train = corrupt(d.train, spec, *d.geometry, occluder);
    }
    if (cfg.corruption.test && !d.test.empty()) {
      spec.rng_seed = derive_seed(seed, 2);
      d.test = corrupt(d.test, spec, *d.geometry, occluder);
    }
  }
  return d;
}

struct CellResult {
  Method method = Method::dlrr_cr;
  Eigen::Index dim = 0;
  std::uint64_t seed = 0;
  std::optional<double> accuracy;
  std::string error;
};

struct ExperimentResults {
  std::vector<Method> methods;
  std::vector<Eigen::Index> dims;
  std::vector<std::uint64_t> seeds;
  std::vector<CellResult> cells;
  SplitProtocol split = SplitProtocol::given;

  /// Mean over seeds; unset when any seed of the cell failed.
  std::optional<double> mean_accuracy(Method m, Eigen::Index dim) const {
    double sum = 0.0;
    int count = 0;
    for (const auto& c : cells) {
      if (c.method != m || c.dim != dim) continue;
      if (!c.accuracy) return std::nullopt;
      sum += *c.accuracy;
      ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / count;
  }
};

inline PipelineConfig cell_pipeline_config(const ExperimentConfig& cfg, Method m, Eigen::Index dim) {
  PipelineConfig pc;
  pc.method = m;
  pc.dim = dim;
  pc.solver = cfg.solver;
  pc.solver.lambda = cfg.lambda_for(dim);
  pc.beta = cfg.beta;
  pc.src_lambda = cfg.src_lambda;
  pc.dictionary_source = cfg.dictionary_source;
  return pc;
}

inline ExperimentResults run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr) {
  cfg.validate();
  ExperimentResults res;
  res.methods = cfg.methods;
  res.dims = cfg.dims;
  res.seeds = cfg.seeds;
  res.split = cfg.split;
  const DataPool pool = load_pool(cfg);

  for (std::uint64_t seed : cfg.seeds) {
    std::optional<PreparedData> data;
    std::string data_error;
    try {
      data = prepare_data(cfg, pool, seed);
    } catch (const Error& e) {
      data_error = std::string("stage data: ") + e.what();
    }
    // Recoveries shared by cells with identical effective solver settings.
    std::map<std::pair<double, double>, std::pair<std::optional<RecoveryResult>, std::string>> cache;
    for (Method m : cfg.methods) {
      for (Eigen::Index dim : cfg.dims) {
        CellResult cell{m, dim, seed, std::nullopt, data_error};
        if (data) {
          try {
            const PipelineConfig pc = cell_pipeline_config(cfg, m, dim);
            const RecoveryResult* pre = nullptr;
            if (uses_recovery(m)) {
              const SolverConfig sc = effective_solver(pc);
              auto& slot = cache[{sc.eta, sc.lambda}];
              if (!slot.first && slot.second.empty()) {
                try {
                  slot.first = recover_dictionary(data->train, sc);
                } catch (const Error& e) {
                  slot.second = std::string("stage recover: ") + e.what();
                }
              }
              if (!slot.first) throw Error(ErrorKind::solver, slot.second);
              pre = &*slot.first;
            }
            TrainedModel model = train_with(data->train, pc, pre);
            EvaluationReport rep = evaluate(model, data->test);
            cell.accuracy = rep.accuracy;
            if (!rep.accuracy) cell.error = "empty test set";
          } catch (const Error& e) {
            cell.error = e.what();
          }
        }
        if (progress) {
          *progress << to_string(m) << " dim=" << dim << " seed=" << seed << ' ';
          if (cell.accuracy) {
            *progress << "accuracy=" << *cell.accuracy << '\n';
          } else {
            *progress << "failed: " << cell.error << '\n';
          }
        }
        res.cells.push_back(std::move(cell));
      }
    }
  }
  return res;
}

namespace detail {
inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
}  // namespace detail

/// method,dim,seed,accuracy (nan for failed cells)
inline void write_long_csv(std::ostream& os, const ExperimentResults& r) {
  os << "method,dim,seed,accuracy\n";
  for (const auto& c : r.cells) {
    os << to_string(c.method) << ',' << c.dim << ',' << c.seed << ','
       << (c.accuracy ? detail::fixed(*c.accuracy, 6) : "nan") << '\n';
  }
}

/// method,dim,mean_accuracy
inline void write_mean_csv(std::ostream& os, const ExperimentResults& r) {
  os << "method,dim,mean_accuracy\n";
  for (Method m : r.methods) {
    for (auto d : r.dims) {
      auto a = r.mean_accuracy(m, d);
      os << to_string(m) << ',' << d << ',' << (a ? detail::fixed(*a, 6) : "nan") << '\n';
    }
  }
}

/// One row per method, one column per dim, mean accuracy in percent.
inline void write_table_csv(std::ostream& os, const ExperimentResults& r) {
  os << "method";
  for (auto d : r.dims) os << ',' << d;
  os << '\n';
  for (Method m : r.methods) {
    os << to_string(m);
    for (auto d : r.dims) {
      auto a = r.mean_accuracy(m, d);
      os << ',' << (a ? detail::fixed(100.0 * *a, 2) : "nan");
    }
    os << '\n';
  }
}

inline void write_failures_csv(std::ostream& os, const ExperimentResults& r) {
  os << "method,dim,seed,error\n";
  for (const auto& c : r.cells) {
    if (c.accuracy) continue;
    std::string msg = c.error;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    os << to_string(c.method) << ',' << c.dim << ',' << c.seed << ",\"" << msg << "\"\n";
  }
}

/// For AR protocols: method,dim,reference_percent,observed_percent.
inline void write_reference_csv(std::ostream& os, const ExperimentResults& r) {
  os << "method,dim,reference_percent,observed_percent\n";
  for (Method m : r.methods) {
    for (auto d : r.dims) {
      auto ref = ar_reference_accuracy(r.split, m, d);
      auto obs = r.mean_accuracy(m, d);
      os << to_string(m) << ',' << d << ',' << (ref ? detail::fixed(*ref, 2) : "nan") << ','
         << (obs ? detail::fixed(100.0 * *obs, 2) : "nan") << '\n';
    }
  }
}

inline void write_results(const std::filesystem::path& dir, const ExperimentResults& r) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw DataError("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("results_long.csv");
    write_long_csv(os, r);
  }
  {
    auto os = open("results_mean.csv");
    write_mean_csv(os, r);
  }
  {
    auto os = open("results_table.csv");
    write_table_csv(os, r);
  }
  {
    auto os = open("failures.csv");
    write_failures_csv(os, r);
  }
  if (is_ar_protocol(r.split)) {
    auto os = open("reference_comparison.csv");
    write_reference_csv(os, r);
  }
}

}  // namespace dlrr

#endif  // DLRR_EXPERIMENT_HPP
