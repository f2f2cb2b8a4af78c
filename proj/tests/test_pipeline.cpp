#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dlrr/corruption.hpp"
#include "dlrr/pipeline.hpp"
#include "dlrr/synthetic.hpp"

using namespace dlrr;
namespace fs = std::filesystem;

namespace {

SynthData separable(std::uint64_t seed, int classes = 3, int per_class = 10) {
  SynthParams p;
  p.classes = classes;
  p.ambient_dim = 40;
  p.rank = 2;
  p.per_class = per_class;
  p.noise = 0.02;
  p.rng_seed = seed;
  return synth_multisubspace(p);
}

PipelineConfig small_config(Method m = Method::dlrr_cr) {
  PipelineConfig c;
  c.method = m;
  c.dim = 5;
  c.solver.lambda = 0.5;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dlrr_test_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Train, RankOneProjectionReconstructsDictionary) {
  SynthParams p;
  p.classes = 2;
  p.ambient_dim = 20;
  p.rank = 1;
  p.per_class = 6;
  p.rng_seed = 1;
  const SynthData d = synth_multisubspace(p);
  PipelineConfig c;
  c.dim = 1;
  c.solver.lambda = 1.0;
  const TrainedModel m = train(d.observed, c);
  ASSERT_TRUE(m.recovery && m.projection);
  const Matrix& dict = m.recovery->clean_dictionary;
  EXPECT_LE((m.projection->apply_all(d.observed.data) - dict).norm(), 1e-6 * dict.norm());
  EXPECT_TRUE(m.recovery->all_converged());
}

TEST(Train, DimensionErrorCarriesStageTag) {
  const SynthData d = separable(2);
  PipelineConfig c = small_config();
  c.dim = 500;
  try {
    train(d.observed, c);
    FAIL() << "expected a configuration error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("stage pca"), std::string::npos) << e.what();
  }
  EXPECT_THROW(train(SampleMatrix(Matrix(40, 0), {}), small_config()), DataError);
}

TEST(Train, MethodsWireStagesAsDocumented) {
  const SynthData d = separable(3);
  for (Method m : all_methods()) {
    const TrainedModel model = train(d.observed, small_config(m));
    EXPECT_EQ(model.recovery.has_value(), uses_recovery(m)) << to_string(m);
    EXPECT_EQ(model.projection.has_value(), uses_projection(m)) << to_string(m);
    if (forces_zero_eta(m)) {
      EXPECT_EQ(model.config.solver.eta, 0.0);
    }
    EXPECT_EQ(model.dictionary().size(), d.observed.cols());
  }
}

TEST(Train, SerializationIsDeterministic) {
  const SynthData d = separable(4);
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  save_model(train(d.observed, small_config()), a);
  save_model(train(d.observed, small_config()), b);
  EXPECT_EQ(slurp(a / "model.dlm"), slurp(b / "model.dlm"));
  EXPECT_EQ(slurp(a / "config.txt"), slurp(b / "config.txt"));
}

TEST(Train, SaveLoadPreservesPredictions) {
  const SynthData d = separable(5);
  for (Method m : {Method::dlrr_cr, Method::dlrr_src, Method::lrr_crc, Method::lrc, Method::nn}) {
    const TrainedModel model = train(d.observed, small_config(m));
    const fs::path dir = scratch("rt_" + to_string(m));
    save_model(model, dir);
    const TrainedModel back = load_model(dir);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
      Vector y(40);
      for (auto& v : y) v = g(rng);
      const auto o1 = predict(model, y), o2 = predict(back, y);
      EXPECT_EQ(o1.predicted_class, o2.predicted_class);
      EXPECT_EQ(o1.per_class_residuals, o2.per_class_residuals) << to_string(m);
    }
  }
}

TEST(Predict, TrainingColumnKeepsItsLabel) {
  const SynthData d = separable(7);
  const TrainedModel model = train(d.observed, small_config());
  for (Eigen::Index j = 0; j < d.observed.cols(); j += 4) {
    EXPECT_EQ(predict(model, d.observed.data.col(j)).predicted_class,
              d.observed.labels[static_cast<std::size_t>(j)]);
  }
}

TEST(Predict, ZeroQueryIsDegenerate) {
  // A raw zero query lands on -W^T mean in feature space, which is nonzero
  // for an uncentred model; zeroing the mean makes the features vanish.
  const SynthData d = separable(8);
  TrainedModel model = train(d.observed, small_config());
  const Vector zero_features = -model.feature_space.basis.transpose() * model.feature_space.mean;
  ASSERT_GT(zero_features.norm(), 0.0);
  model.feature_space.mean.setZero();
  EXPECT_THROW(predict(model, Vector::Zero(40)), DegenerateQuery);
}

TEST(Predict, BetaOverride) {
  const SynthData d = separable(9);
  const TrainedModel model = train(d.observed, small_config());
  const Vector y = d.observed.data.col(3);
  const auto same = predict(model, y, model.config.beta);
  EXPECT_EQ(same.per_class_residuals, predict(model, y).per_class_residuals);
  const auto other = predict(model, y, 50.0);
  EXPECT_EQ(other.per_class_residuals,
            crc_classify(model.dictionary(), query_features(model, y), 50.0).per_class_residuals);
}

// Occluded training data, then a held-out block occlusion on one training
// column: the projected pipeline should keep the label where plain CRC on
// the same features does not.
TEST(Predict, ProjectionSurvivesBlockOcclusion) {
  int projected_correct = 0, plain_failures = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthParams p;
    p.classes = 3;
    p.ambient_dim = 256;
    p.rank = 3;
    p.per_class = 15;
    p.rng_seed = seed;
    SynthData d = synth_multisubspace(p);
    to_intensities(d.observed.data, 0.5, 0.15);
    CorruptionSpec train_spec;
    train_spec.kind = CorruptionKind::block;
    train_spec.sample_fraction = 0.2;
    train_spec.per_image_extent = 0.55;  // about 30% of the pixels
    train_spec.rng_seed = 500 + seed;
    const SampleMatrix train_set = corrupt(d.observed, train_spec, {16, 16});

    PipelineConfig c;
    c.dim = 8;
    c.solver.lambda = 0.2;
    const TrainedModel projected = train(train_set, c);
    c.method = Method::crc;
    const TrainedModel plain = train(train_set, c);

    CorruptionSpec query_spec = train_spec;
    query_spec.sample_fraction = 1.0;
    query_spec.rng_seed = 1000 + seed;
    const SampleMatrix queries = corrupt(d.observed, query_spec, {16, 16});
    const Eigen::Index j = 22;
    const int label = queries.labels[static_cast<std::size_t>(j)];
    projected_correct += predict(projected, queries.data.col(j)).predicted_class == label;
    plain_failures += predict(plain, queries.data.col(j)).predicted_class != label;
  }
  EXPECT_GE(projected_correct, 4);
  EXPECT_GE(plain_failures, 1);
}

TEST(Evaluate, ResubstitutionIsPerfect) {
  const SynthData d = separable(10);
  const TrainedModel model = train(d.observed, small_config());
  const EvaluationReport rep = evaluate(model, d.observed);
  ASSERT_TRUE(rep.accuracy.has_value());
  EXPECT_EQ(*rep.accuracy, 1.0);
  for (const auto& [label, acc] : rep.per_class_accuracy) EXPECT_EQ(acc, 1.0) << label;
  for (const auto& [key, count] : rep.confusion) EXPECT_EQ(key.first, key.second);
}

TEST(Evaluate, EmptyTestSet) {
  const SynthData d = separable(11);
  const TrainedModel model = train(d.observed, small_config(Method::crc));
  const EvaluationReport rep = evaluate(model, SampleMatrix(Matrix(40, 0), {}));
  EXPECT_FALSE(rep.accuracy.has_value());
  EXPECT_TRUE(rep.queries.empty());
  std::ostringstream os;
  write_evaluation_csv(os, rep);
  EXPECT_EQ(os.str(), "query_index,true_label,predicted_label,residual_1,residual_2,residual_3\n");
}

TEST(Evaluate, OrderInvarianceAndExactMean) {
  const SynthData train_data = separable(12);
  SynthParams p;
  p.classes = 3;
  p.ambient_dim = 40;
  p.rank = 2;
  p.per_class = 10;
  p.noise = 0.8;
  p.rng_seed = 13;
  const SampleMatrix test = synth_multisubspace(p).observed;
  const TrainedModel model = train(train_data.observed, small_config());
  const EvaluationReport a = evaluate(model, test);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(test.cols()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(14));
  const EvaluationReport b = evaluate(model, test.select(perm));
  EXPECT_EQ(*a.accuracy, *b.accuracy);
  EXPECT_EQ(a.per_class_accuracy, b.per_class_accuracy);
  EXPECT_EQ(a.confusion, b.confusion);

  int hits = 0;
  for (const auto& q : a.queries) hits += q.true_label == q.predicted_label;
  EXPECT_EQ(*a.accuracy, static_cast<double>(hits) / static_cast<double>(a.queries.size()));

  std::ostringstream os;
  write_evaluation_csv(os, a);
  std::istringstream is(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  EXPECT_EQ(lines, 1 + static_cast<int>(test.cols()));
}

TEST(PipelineConfigText, RoundTripAndStrictness) {
  PipelineConfig c = small_config(Method::dlrr_src);
  c.solver.lambda = 0.1 + 0.2;  // not exactly representable in short form
  c.dictionary_source = DictionarySource::clean;
  std::ostringstream os;
  write_pipeline_config(os, c);
  std::istringstream is(os.str());
  KvConfig kv = KvConfig::parse(is);
  const PipelineConfig back = read_pipeline_config(kv);
  EXPECT_NO_THROW(kv.reject_unknown());
  EXPECT_EQ(back.solver.lambda, c.solver.lambda);
  EXPECT_EQ(back.method, Method::dlrr_src);
  EXPECT_EQ(back.dictionary_source, DictionarySource::clean);
  EXPECT_THROW(parse_method("svm"), ConfigError);
  std::istringstream bad("[pipeline]\ndim = 0\n");
  KvConfig kb = KvConfig::parse(bad);
  EXPECT_THROW(read_pipeline_config(kb).validate(), ConfigError);
}
