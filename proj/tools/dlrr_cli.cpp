// dlrr command-line runner.
//
// Subcommands: recover, train, predict, evaluate, corrupt, benchmark, synth.
// Exit status: 0 success, 1 configuration error, 2 data error, 3 solver failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "dlrr/dlrr.hpp"

namespace fs = std::filesystem;
using namespace dlrr;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool trace = false;
  std::string input;
  std::string model;
  std::optional<double> beta;
};

bool is_manifest(const std::string& path) { return fs::path(path).extension() == ".csv"; }

KvConfig load_kv(const std::string& path) {
  if (path.empty()) return KvConfig{};
  return KvConfig::load(path);
}

// Samples file, or one split of a manifest.
SampleMatrix load_input(const std::string& path, Split which) {
  if (path.empty()) throw ConfigError("--input is required");
  if (!is_manifest(path)) return load_samples(path);
  LoadedDataset ds = load_dataset(load_manifest(path));
  return which == Split::train ? std::move(ds.train) : std::move(ds.test);
}

fs::path require_out(const CommonFlags& f) {
  if (f.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(f.out);
  return fs::path(f.out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DataError("cannot write " + p.string());
  return os;
}

// Trace file lives next to the other outputs; the sink must not outlive it.
struct TraceFile {
  std::ofstream os;
  TraceSink sink;
  TraceFile(bool enabled, const fs::path& dir) {
    if (!enabled) return;
    os = open_out(dir / "trace.csv");
    write_trace_header(os);
    sink = csv_trace_sink(os);
  }
};

int cmd_recover(const CommonFlags& f) {
  KvConfig kv = load_kv(f.config);
  const SolverConfig sc = read_solver_config(kv);
  kv.reject_unknown();
  sc.validate();
  const SampleMatrix x = load_input(f.input, Split::train);
  const fs::path out = require_out(f);
  TraceFile trace(f.trace, out);

  const RecoveryResult r = recover_dictionary(x, sc, trace.sink);
  save_samples((out / "clean_dictionary.dlm").string(), SampleMatrix(r.clean_dictionary, x.labels));
  auto summary = open_out(out / "recovery.csv");
  summary << "class_id,iterations,converged,final_objective\n";
  for (std::size_t c = 0; c < r.class_ids.size(); ++c) {
    const int id = r.class_ids[c];
    save_matrix((out / ("Z_" + std::to_string(id) + ".dlm")).string(), r.per_class_Z[c]);
    save_matrix((out / ("E_" + std::to_string(id) + ".dlm")).string(), r.per_class_E[c]);
    const auto& tr = r.objective_trace[c];
    summary << id << ',' << r.iterations[c] << ',' << (r.converged[c] ? 1 : 0) << ','
            << (tr.empty() ? std::string("nan") : format_double(tr.back())) << '\n';
    if (!r.converged[c]) {
      std::cerr << "warning: class " << id << " hit max_iter (" << sc.max_iter << ") before converging\n";
    }
  }
  std::cout << "recovered " << r.class_ids.size() << " classes, coherence "
            << cross_class_coherence(r.clean_dictionary, x.labels) << '\n';
  return 0;
}

int cmd_train(const CommonFlags& f) {
  KvConfig kv = load_kv(f.config);
  const PipelineConfig pc = read_pipeline_config(kv);
  kv.reject_unknown();
  pc.validate();
  const SampleMatrix x = load_input(f.input, Split::train);
  const fs::path out = require_out(f);
  TraceFile trace(f.trace, out);
  const TrainedModel m = train(x, pc, trace.sink);
  save_model(m, out);
  std::cout << "trained " << to_string(pc.method) << " on " << x.cols() << " samples, "
            << m.feature_space.dim() << " features\n";
  if (m.recovery && !m.recovery->all_converged()) {
    std::cerr << "warning: some classes hit max_iter before converging\n";
  }
  return 0;
}

TrainedModel load_model_flag(const CommonFlags& f) {
  if (f.model.empty()) throw ConfigError("--model is required");
  return load_model(f.model);
}

int cmd_predict(const CommonFlags& f) {
  const TrainedModel m = load_model_flag(f);
  const SampleMatrix q = load_input(f.input, Split::test);
  const fs::path out = require_out(f);
  auto os = open_out(out / "predictions.csv");
  const auto& ids = m.dictionary().class_ids();
  os << "query_index,predicted_label";
  for (int id : ids) os << ",residual_" << id;
  os << '\n';
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const ClassificationOutcome o = f.beta ? predict(m, q.data.col(j), *f.beta) : predict(m, q.data.col(j));
    os << j << ',' << o.predicted_class;
    for (Eigen::Index k = 0; k < o.per_class_residuals.size(); ++k) {
      os << ',' << format_double(o.per_class_residuals(k));
    }
    os << '\n';
  }
  std::cout << "wrote " << q.cols() << " predictions\n";
  return 0;
}

int cmd_evaluate(const CommonFlags& f) {
  TrainedModel m = load_model_flag(f);
  if (f.beta) {
    m.config.beta = *f.beta;
    m.classifier = detail::build_classifier(m.config, m.dictionary(), *f.beta);
  }
  const SampleMatrix test = load_input(f.input, Split::test);
  const fs::path out = require_out(f);
  const EvaluationReport rep = evaluate(m, test);
  {
    auto os = open_out(out / "evaluation.csv");
    write_evaluation_csv(os, rep);
  }
  auto os = open_out(out / "summary.csv");
  os << "class,accuracy\n";
  os << "all," << (rep.accuracy ? format_double(*rep.accuracy) : "nan") << '\n';
  for (const auto& [label, a] : rep.per_class_accuracy) os << label << ',' << format_double(a) << '\n';
  if (rep.accuracy) {
    std::cout << "accuracy " << *rep.accuracy << " over " << rep.queries.size() << " queries\n";
  } else {
    std::cout << "no queries; accuracy undefined\n";
  }
  return 0;
}

// The sidecar is itself a valid corrupt config: rerunning with it on the same
// input regenerates the output exactly.
void write_spec_sidecar(const fs::path& p, const CorruptionSpec& spec, const ImageGeometry& g,
                        const std::string& input, const std::string& occluder,
                        const std::vector<Eigen::Index>& cols) {
  auto os = open_out(p);
  os << "[corruption]\n"
     << "kind = " << to_string(spec.kind) << '\n'
     << "sample_fraction = " << format_double(spec.sample_fraction) << '\n'
     << "per_image_extent = " << format_double(spec.per_image_extent) << '\n'
     << "seed = " << spec.rng_seed << '\n';
  if (!occluder.empty()) os << "occluder = " << occluder << '\n';
  os << "[data]\nheight = " << g.height << "\nwidth = " << g.width << '\n';
  os << "# input = " << input << '\n' << "# corrupted_columns =";
  for (auto c : cols) os << ' ' << c;
  os << '\n';
}

int cmd_corrupt(const CommonFlags& f) {
  KvConfig kv = load_kv(f.config);
  CorruptionSpec spec;
  spec.kind = parse_corruption_kind(kv.require_string("corruption.kind"));
  spec.sample_fraction = kv.take_double("corruption.sample_fraction", spec.sample_fraction);
  if (!kv.has("corruption.per_image_extent")) {
    throw ConfigError("corruption.per_image_extent is required");
  }
  spec.per_image_extent = kv.take_double("corruption.per_image_extent", 0.0);
  spec.rng_seed = static_cast<std::uint64_t>(kv.take_int("corruption.seed", 0));
  if (f.seed) spec.rng_seed = *f.seed;
  const std::string occluder_path = kv.take_string("corruption.occluder", "");
  const long h = kv.take_int("data.height", 0);
  const long w = kv.take_int("data.width", 0);
  kv.reject_unknown();
  spec.validate();
  std::optional<Image> occluder;
  if (!occluder_path.empty()) occluder = read_image(occluder_path);
  const fs::path out = require_out(f);
  if (f.input.empty()) throw ConfigError("--input is required");

  if (!is_manifest(f.input)) {
    if (h <= 0 || w <= 0) throw ConfigError("data.height and data.width are required for sample files");
    const SampleMatrix x = load_samples(f.input);
    const CorruptionResult r = corrupt_detailed(x, spec, ImageGeometry{h, w}, occluder);
    save_samples((out / "corrupted.dlm").string(), r.samples);
    write_spec_sidecar(out / "corrupted.spec.txt", spec, ImageGeometry{h, w}, f.input, occluder_path,
                       r.corrupted_columns);
    std::cout << "corrupted " << r.corrupted_columns.size() << " of " << x.cols() << " samples\n";
    return 0;
  }

  // Manifest: corrupt every listed image as one pool, keep labels and splits.
  DatasetManifest man = load_manifest(f.input);
  if (h > 0 && w > 0) man.geometry = ImageGeometry{h, w};
  DatasetManifest all = man;
  for (auto& e : all.entries) e.split = Split::train;
  LoadedDataset ds = load_dataset(all);
  const CorruptionResult r = corrupt_detailed(ds.train, spec, ds.geometry, occluder);
  fs::create_directories(out / "images");
  auto mf = open_out(out / "manifest.csv");
  mf << "path,label,split\n";
  for (std::size_t k = 0; k < man.entries.size(); ++k) {
    const auto& e = man.entries[k];
    const std::string name = std::to_string(k) + "_" + fs::path(e.path).stem().string() + ".pgm";
    write_pgm((out / "images" / name).string(),
              unvectorize(r.samples.data.col(static_cast<Eigen::Index>(k)), ds.geometry.height,
                          ds.geometry.width));
    mf << "images/" << name << ',' << e.label << ',' << (e.split == Split::train ? "train" : "test") << '\n';
  }
  write_spec_sidecar(out / "corrupted.spec.txt", spec, ds.geometry, f.input, occluder_path,
                     r.corrupted_columns);
  std::cout << "corrupted " << r.corrupted_columns.size() << " of " << man.entries.size() << " images\n";
  return 0;
}

int cmd_benchmark(const CommonFlags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_experiment_config(f.config);
  if (f.seed) cfg.seeds = {*f.seed};
  const fs::path out = require_out(f);
  const ExperimentResults r = run_experiment(cfg, &std::cerr);
  write_results(out, r);
  std::size_t failed = 0;
  for (const auto& c : r.cells) failed += c.accuracy ? 0 : 1;
  write_table_csv(std::cout, r);
  if (failed) std::cerr << failed << " of " << r.cells.size() << " cells failed; see failures.csv\n";
  return 0;
}

int cmd_synth(const CommonFlags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_experiment_config(f.config);
  if (cfg.source != DataSource::synthetic) throw ConfigError("synth needs data.source = synthetic");
  const std::uint64_t seed = f.seed.value_or(cfg.seeds.front());
  const fs::path out = require_out(f);
  const PreparedData d = prepare_data(cfg, DataPool{}, seed);

  // Ground truth from the same generator stream.
  const auto& s = cfg.synthetic;
  SynthParams p = s.params;
  p.rng_seed = derive_seed(seed, 0);
  SynthData sd = synth_multisubspace(p);
  if (s.intensities) to_intensities(sd.clean, s.intensity_mean, s.intensity_std);
  std::vector<Eigen::Index> tr, te;
  for (int c = 0; c < p.classes; ++c) {
    for (int k = 0; k < p.per_class; ++k) {
      (k < s.train_per_class ? tr : te).push_back(static_cast<Eigen::Index>(c) * p.per_class + k);
    }
  }
  const SampleMatrix truth(sd.clean, sd.observed.labels);
  save_samples((out / "train.dlm").string(), d.train);
  save_samples((out / "test.dlm").string(), d.test);
  save_samples((out / "truth_train.dlm").string(), truth.select(tr));
  save_samples((out / "truth_test.dlm").string(), truth.select(te));
  std::cout << "wrote " << d.train.cols() << " train and " << d.test.cols() << " test samples ("
            << s.height << "x" << s.width << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative low-rank representation with collaborative classification"};
  app.require_subcommand(1);
  CommonFlags f;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", f.config, "Key-value config file");
    if (needs_config) c->required();
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--out", f.out, "Output directory")->required();
    sub->add_flag("--trace", f.trace, "Write solver iterations to <out>/trace.csv");
  };

  auto* recover = app.add_subcommand("recover", "Recover the clean low-rank dictionary");
  add_common(recover, false);
  recover->add_option("--input", f.input, "Training samples (.dlm) or manifest (.csv)")->required();

  auto* trn = app.add_subcommand("train", "Train a model bundle");
  add_common(trn, false);
  trn->add_option("--input", f.input, "Training samples (.dlm) or manifest (.csv)")->required();

  auto* pred = app.add_subcommand("predict", "Classify query samples");
  add_common(pred, false);
  pred->add_option("--model", f.model, "Model bundle directory")->required();
  pred->add_option("--input", f.input, "Query samples (.dlm) or manifest (.csv, test split)")->required();
  pred->add_option("--beta", f.beta, "Override the CRC regularizer");

  auto* eval = app.add_subcommand("evaluate", "Score a model on labeled test samples");
  add_common(eval, false);
  eval->add_option("--model", f.model, "Model bundle directory")->required();
  eval->add_option("--input", f.input, "Test samples (.dlm) or manifest (.csv, test split)")->required();
  eval->add_option("--beta", f.beta, "Override the CRC regularizer");

  auto* corr = app.add_subcommand("corrupt", "Apply pixel or block corruption");
  add_common(corr, true);
  corr->add_option("--input", f.input, "Samples (.dlm) or manifest (.csv)")->required();

  auto* bench = app.add_subcommand("benchmark", "Run a methods x dims x seeds sweep");
  add_common(bench, true);

  auto* syn = app.add_subcommand("synth", "Generate synthetic union-of-subspaces data");
  add_common(syn, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::config);
  }

  try {
    if (*recover) return cmd_recover(f);
    if (*trn) return cmd_train(f);
    if (*pred) return cmd_predict(f);
    if (*eval) return cmd_evaluate(f);
    if (*corr) return cmd_corrupt(f);
    if (*bench) return cmd_benchmark(f);
    if (*syn) return cmd_synth(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::data);
  }
  return static_cast<int>(ErrorKind::config);
}
