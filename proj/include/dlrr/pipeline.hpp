#ifndef DLRR_PIPELINE_HPP
#define DLRR_PIPELINE_HPP

// Training and inference for the full method and its ablations/baselines.
//
//   dlrr-cr   recover (eta > 0) -> projection -> PCA on D -> CRC
//   dlrr-src  as dlrr-cr with SRC
//   lrr-cr    as dlrr-cr with eta = 0
//   lrr-crc   eta = 0, PCA on D, no query correction
//   crc/src/lrc/nn  PCA on the raw training data, no correction
//
// Queries are corrected in raw space before PCA. The classifier dictionary
// holds the PCA coordinates of the ORIGINAL training samples unless
// dictionary_source = clean.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <variant>

#include "dlrr/classifiers.hpp"
#include "dlrr/features.hpp"
#include "dlrr/kv_config.hpp"
#include "dlrr/lrr_solver.hpp"
#include "dlrr/matrix_io.hpp"
#include "dlrr/projection.hpp"

namespace dlrr {

enum class Method { dlrr_cr, dlrr_src, lrr_cr, lrr_crc, crc, src, lrc, nn };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m = {Method::dlrr_cr, Method::lrr_cr, Method::lrr_crc, Method::crc,
                                        Method::src,     Method::lrc,    Method::nn,      Method::dlrr_src};
  return m;
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::dlrr_cr: return "dlrr-cr";
    case Method::dlrr_src: return "dlrr-src";
    case Method::lrr_cr: return "lrr-cr";
    case Method::lrr_crc: return "lrr-crc";
    case Method::crc: return "crc";
    case Method::src: return "src";
    case Method::lrc: return "lrc";
    case Method::nn: return "nn";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : all_methods()) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

inline bool uses_recovery(Method m) {
  return m == Method::dlrr_cr || m == Method::dlrr_src || m == Method::lrr_cr || m == Method::lrr_crc;
}
inline bool uses_projection(Method m) {
  return m == Method::dlrr_cr || m == Method::dlrr_src || m == Method::lrr_cr;
}
inline bool forces_zero_eta(Method m) { return m == Method::lrr_cr || m == Method::lrr_crc; }

enum class ClassifierKind { crc, src, lrc, nn };

inline ClassifierKind classifier_of(Method m) {
  switch (m) {
    case Method::dlrr_src:
    case Method::src: return ClassifierKind::src;
    case Method::lrc: return ClassifierKind::lrc;
    case Method::nn: return ClassifierKind::nn;
    default: return ClassifierKind::crc;
  }
}

enum class DictionarySource { original, clean };

struct PipelineConfig {
  Method method = Method::dlrr_cr;
  SolverConfig solver;
  Eigen::Index dim = 100;
  double beta = 1.1;
  double src_lambda = 0.001;
  DictionarySource dictionary_source = DictionarySource::original;

  void validate() const {
    solver.validate();
    if (dim < 1) throw ConfigError("pipeline: dim must be positive");
    if (!(beta > 0.0)) throw ConfigError("pipeline: beta must be positive");
    if (!(src_lambda > 0.0)) throw ConfigError("pipeline: src_lambda must be positive");
  }
};

using AnyClassifier = std::variant<CrcClassifier, SrcClassifier, LrcClassifier, Dictionary>;

struct TrainedModel {
  PipelineConfig config;
  std::optional<RecoveryResult> recovery;
  std::optional<ProjectionMatrix> projection;
  FeatureSpace feature_space;
  Matrix dictionary_features;  // d x n, before column normalization
  std::vector<int> labels;
  AnyClassifier classifier;

  const Dictionary& dictionary() const {
    return std::visit(
        [](const auto& c) -> const Dictionary& {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, Dictionary>) {
            return c;
          } else {
            return c.dictionary();
          }
        },
        classifier);
  }
};

namespace detail {

template <typename F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + stage + ": " + e.what());
  }
}

inline AnyClassifier build_classifier(const PipelineConfig& cfg, Dictionary dict, double beta) {
  switch (classifier_of(cfg.method)) {
    case ClassifierKind::crc: return CrcClassifier(std::move(dict), beta);
    case ClassifierKind::src: {
      SrcOptions o;
      o.lambda = cfg.src_lambda;
      return SrcClassifier(std::move(dict), o);
    }
    case ClassifierKind::lrc: return LrcClassifier(std::move(dict));
    case ClassifierKind::nn: return dict;
  }
  return dict;
}

}  // namespace detail

/// Solver settings a method actually runs with.
inline SolverConfig effective_solver(const PipelineConfig& config) {
  SolverConfig sc = config.solver;
  if (forces_zero_eta(config.method)) sc.eta = 0.0;
  return sc;
}

/// train() with an optional recovery computed earlier for the same training
/// data and effective_solver(config); lets sweeps share one solve.
inline TrainedModel train_with(const SampleMatrix& x, const PipelineConfig& config,
                               const RecoveryResult* precomputed, const TraceSink& sink = {}) {
  detail::run_stage("config", [&] { config.validate(); return 0; });
  x.validate();
  if (x.empty()) throw DataError("train: no training samples");

  TrainedModel model;
  model.config = config;
  model.labels = x.labels;
  const Matrix* pca_source = &x.data;
  if (uses_recovery(config.method)) {
    const SolverConfig sc = effective_solver(config);
    model.config.solver = sc;
    if (precomputed) {
      if (precomputed->clean_dictionary.rows() != x.rows() ||
          precomputed->clean_dictionary.cols() != x.cols()) {
        throw DataError("train: precomputed recovery does not match training data");
      }
      model.recovery = *precomputed;
    } else {
      model.recovery = detail::run_stage("recover", [&] { return recover_dictionary(x, sc, sink); });
    }
    pca_source = &model.recovery->clean_dictionary;
    if (uses_projection(config.method)) {
      model.projection = detail::run_stage(
          "projection", [&] { return learn_projection(x.data, model.recovery->clean_dictionary); });
    }
  }
  model.feature_space = detail::run_stage("pca", [&] { return fit_pca(*pca_source, config.dim); });
  const bool clean_dict = config.dictionary_source == DictionarySource::clean && model.recovery;
  model.dictionary_features = project_all(model.feature_space, clean_dict ? *pca_source : x.data);
  model.classifier = detail::run_stage("classifier", [&] {
    return detail::build_classifier(config, Dictionary(model.dictionary_features, model.labels),
                                    config.beta);
  });
  return model;
}

inline TrainedModel train(const SampleMatrix& x, const PipelineConfig& config,
                          const TraceSink& sink = {}) {
  return train_with(x, config, nullptr, sink);
}

/// Feature-space representation of a raw query (corrected, then projected).
inline Vector query_features(const TrainedModel& model, const VectorRef& y) {
  if (model.projection) return project(model.feature_space, model.projection->apply(y));
  return project(model.feature_space, y);
}

inline ClassificationOutcome predict(const TrainedModel& model, const VectorRef& y) {
  const Vector f = query_features(model, y);
  return std::visit(
      [&](const auto& c) -> ClassificationOutcome {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, Dictionary>) {
          return nn_classify(c, f);
        } else {
          return c.classify(f);
        }
      },
      model.classifier);
}

/// Prediction with a CRC regularizer other than the one the model was built with.
inline ClassificationOutcome predict(const TrainedModel& model, const VectorRef& y, double beta) {
  if (classifier_of(model.config.method) != ClassifierKind::crc || beta == model.config.beta) {
    return predict(model, y);
  }
  return crc_classify(model.dictionary(), query_features(model, y), beta);
}

struct QueryResult {
  Eigen::Index index = 0;
  int true_label = 0;
  int predicted_label = 0;
  Vector residuals;
};

struct EvaluationReport {
  std::vector<int> class_ids;
  std::vector<QueryResult> queries;
  std::optional<double> accuracy;  // unset for an empty test set
  std::map<int, double> per_class_accuracy;
  std::map<std::pair<int, int>, int> confusion;  // (true, predicted) -> count
};

inline EvaluationReport evaluate(const TrainedModel& model, const SampleMatrix& test) {
  test.validate();
  EvaluationReport rep;
  rep.class_ids = model.dictionary().class_ids();
  std::map<int, std::pair<int, int>> per_class;  // label -> (correct, total)
  int correct = 0;
  for (Eigen::Index j = 0; j < test.cols(); ++j) {
    ClassificationOutcome o = predict(model, test.data.col(j));
    QueryResult q{j, test.labels[static_cast<std::size_t>(j)], o.predicted_class,
                  std::move(o.per_class_residuals)};
    const bool hit = q.true_label == q.predicted_label;
    correct += hit;
    auto& pc = per_class[q.true_label];
    pc.first += hit;
    pc.second += 1;
    ++rep.confusion[{q.true_label, q.predicted_label}];
    rep.queries.push_back(std::move(q));
  }
  if (!rep.queries.empty()) {
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.queries.size());
  }
  for (const auto& [label, ct] : per_class) {
    rep.per_class_accuracy[label] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return rep;
}

/// query_index,true_label,predicted_label,residual_<label>...
inline void write_evaluation_csv(std::ostream& os, const EvaluationReport& rep) {
  os << "query_index,true_label,predicted_label";
  for (int c : rep.class_ids) os << ",residual_" << c;
  os << '\n';
  for (const auto& q : rep.queries) {
    os << q.index << ',' << q.true_label << ',' << q.predicted_label;
    for (Eigen::Index k = 0; k < q.residuals.size(); ++k) os << ',' << format_double(q.residuals(k));
    os << '\n';
  }
}

// Model bundle: a directory holding config.txt and model.dlm (matrix
// containers in a fixed order, see save_model).

inline void write_pipeline_config(std::ostream& os, const PipelineConfig& c) {
  os << "[pipeline]\n"
     << "method = " << to_string(c.method) << '\n'
     << "dim = " << c.dim << '\n'
     << "beta = " << format_double(c.beta) << '\n'
     << "src_lambda = " << format_double(c.src_lambda) << '\n'
     << "dictionary_source = " << (c.dictionary_source == DictionarySource::clean ? "clean" : "original")
     << '\n'
     << "[solver]\n"
     << "lambda = " << format_double(c.solver.lambda) << '\n'
     << "eta = " << format_double(c.solver.eta) << '\n'
     << "mu0 = " << format_double(c.solver.mu0) << '\n'
     << "rho_growth = " << format_double(c.solver.rho_growth) << '\n'
     << "mu_max = " << format_double(c.solver.mu_max) << '\n'
     << "epsilon = " << format_double(c.solver.epsilon) << '\n'
     << "max_iter = " << c.solver.max_iter << '\n'
     << "outer_passes = " << c.solver.outer_passes << '\n';
}

inline SolverConfig read_solver_config(KvConfig& kv, const SolverConfig& base = {}) {
  SolverConfig s = base;
  s.lambda = kv.take_double("solver.lambda", s.lambda);
  s.eta = kv.take_double("solver.eta", s.eta);
  s.mu0 = kv.take_double("solver.mu0", s.mu0);
  s.rho_growth = kv.take_double("solver.rho_growth", s.rho_growth);
  s.mu_max = kv.take_double("solver.mu_max", s.mu_max);
  s.epsilon = kv.take_double("solver.epsilon", s.epsilon);
  s.max_iter = static_cast<int>(kv.take_int("solver.max_iter", s.max_iter));
  s.outer_passes = static_cast<int>(kv.take_int("solver.outer_passes", s.outer_passes));
  return s;
}

inline DictionarySource parse_dictionary_source(const std::string& s) {
  if (s == "original") return DictionarySource::original;
  if (s == "clean") return DictionarySource::clean;
  throw ConfigError("dictionary_source must be 'original' or 'clean', got '" + s + "'");
}

inline PipelineConfig read_pipeline_config(KvConfig& kv) {
  PipelineConfig c;
  c.method = parse_method(kv.take_string("pipeline.method", to_string(c.method)));
  c.dim = kv.take_int("pipeline.dim", c.dim);
  c.beta = kv.take_double("pipeline.beta", c.beta);
  c.src_lambda = kv.take_double("pipeline.src_lambda", c.src_lambda);
  c.dictionary_source = parse_dictionary_source(kv.take_string("pipeline.dictionary_source", "original"));
  c.solver = read_solver_config(kv);
  return c;
}

inline void save_model(const TrainedModel& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "config.txt");
    if (!os) throw DataError("cannot write " + (dir / "config.txt").string());
    write_pipeline_config(os, m.config);
    os << "[model]\n"
       << "has_recovery = " << (m.recovery ? "true" : "false") << '\n'
       << "has_projection = " << (m.projection ? "true" : "false") << '\n';
  }
  std::ofstream os(dir / "model.dlm", std::ios::binary);
  if (!os) throw DataError("cannot write " + (dir / "model.dlm").string());
  write_matrix(os, m.feature_space.basis);
  write_matrix(os, m.feature_space.mean);
  write_matrix(os, m.feature_space.explained_variance);
  write_samples(os, SampleMatrix(m.dictionary_features, m.labels));
  if (m.projection) {
    write_matrix(os, m.projection->recovered);
    write_matrix(os, m.projection->source_pinv);
    Matrix meta(1, 3);
    meta << static_cast<double>(m.projection->source_rank), m.projection->fit_residual,
        m.projection->relative_fit_residual;
    write_matrix(os, meta);
  }
  if (m.recovery) {
    const auto& r = *m.recovery;
    write_matrix(os, r.clean_dictionary);
    Matrix meta(3, static_cast<Eigen::Index>(r.class_ids.size()));
    for (std::size_t c = 0; c < r.class_ids.size(); ++c) {
      const auto k = static_cast<Eigen::Index>(c);
      meta(0, k) = r.class_ids[c];
      meta(1, k) = r.iterations[c];
      meta(2, k) = r.converged[c] ? 1.0 : 0.0;
    }
    write_matrix(os, meta);
    for (std::size_t c = 0; c < r.class_ids.size(); ++c) {
      write_matrix(os, r.per_class_Z[c]);
      write_matrix(os, r.per_class_E[c]);
    }
  }
  if (!os) throw DataError("write failed for model bundle " + dir.string());
}

inline TrainedModel load_model(const std::filesystem::path& dir) {
  KvConfig kv = KvConfig::load((dir / "config.txt").string());
  TrainedModel m;
  m.config = read_pipeline_config(kv);
  const bool has_recovery = kv.take_bool("model.has_recovery", false);
  const bool has_projection = kv.take_bool("model.has_projection", false);
  kv.reject_unknown();
  m.config.validate();

  std::ifstream is(dir / "model.dlm", std::ios::binary);
  if (!is) throw DataError("cannot open " + (dir / "model.dlm").string());
  m.feature_space.basis = read_matrix(is);
  m.feature_space.mean = read_matrix(is);
  m.feature_space.explained_variance = read_matrix(is);
  SampleMatrix dict = read_samples(is);
  m.dictionary_features = std::move(dict.data);
  m.labels = std::move(dict.labels);
  if (has_projection) {
    ProjectionMatrix p;
    p.recovered = read_matrix(is);
    p.source_pinv = read_matrix(is);
    Matrix meta = read_matrix(is);
    if (meta.size() != 3) throw DataError("model bundle: bad projection metadata");
    p.source_rank = static_cast<Eigen::Index>(meta(0, 0));
    p.fit_residual = meta(0, 1);
    p.relative_fit_residual = meta(0, 2);
    m.projection = std::move(p);
  }
  if (has_recovery) {
    RecoveryResult r;
    r.clean_dictionary = read_matrix(is);
    Matrix meta = read_matrix(is);
    if (meta.rows() != 3) throw DataError("model bundle: bad recovery metadata");
    for (Eigen::Index k = 0; k < meta.cols(); ++k) {
      r.class_ids.push_back(static_cast<int>(meta(0, k)));
      r.iterations.push_back(static_cast<int>(meta(1, k)));
      r.converged.push_back(meta(2, k) != 0.0);
      r.per_class_Z.push_back(read_matrix(is));
      r.per_class_E.push_back(read_matrix(is));
    }
    r.objective_trace.resize(r.class_ids.size());
    m.recovery = std::move(r);
  }
  if (m.feature_space.basis.cols() != m.dictionary_features.rows()) {
    throw DataError("model bundle: dictionary does not match feature space");
  }
  m.classifier = detail::build_classifier(m.config, Dictionary(m.dictionary_features, m.labels),
                                          m.config.beta);
  return m;
}

}  // namespace dlrr

#endif  // DLRR_PIPELINE_HPP
