// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "dlrr/dlrr.hpp"
#include "oracles.hpp"

using namespace dlrr;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

// Proximal operators against SVD-free and golden-section reference minimizers.
Verdict criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 10);
  std::uniform_real_distribution<double> tau_dist(0.05, 2.0);
  double worst_svt = 0.0, worst_l21 = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix a = oracle::gaussian(size(rng), size(rng), rng);
    const double tau = tau_dist(rng);
    worst_svt = std::max(worst_svt, (svt(a, tau) - oracle::nuclear_prox_als(a, tau, rng)).cwiseAbs().maxCoeff());
  }
  for (int t = 0; t < 100; ++t) {
    const Matrix q = oracle::gaussian(size(rng), size(rng), rng);
    const double tau = tau_dist(rng);
    const Matrix e = shrink_l21(q, tau);
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      worst_l21 = std::max(worst_l21, (e.col(j) - oracle::l2_prox_golden(q.col(j), tau)).cwiseAbs().maxCoeff());
    }
  }
  const double secs = seconds_since(t0);
  return {worst_svt <= 1e-6 && worst_l21 <= 1e-6 && secs < 10.0,
          "max |svt - ref| " + num(worst_svt) + ", max |shrink_l21 - ref| " + num(worst_l21) + ", " +
              num(secs) + " s"};
}

// J-stationarity on multi-class couplings and the column-wise E closed form.
Verdict criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> classes(2, 5), cols(2, 8), rows(5, 15);
  std::uniform_real_distribution<double> mu_dist(0.01, 10.0), eta_dist(1e-4, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int m = rows(rng), ni = cols(rng), nc = classes(rng);
    const Matrix xi = oracle::gaussian(m, ni, rng);
    std::vector<Matrix> dicts;
    for (int c = 1; c < nc; ++c) {
      const int nj = cols(rng);
      dicts.push_back(oracle::gaussian(m, nj, rng) * oracle::gaussian(nj, nj, rng));
    }
    DlrrState st = DlrrState::initial(m, ni, mu_dist(rng));
    st.Z = oracle::gaussian(ni, ni, rng);
    st.Y2 = oracle::gaussian(ni, ni, rng);
    SolverConfig cfg;
    cfg.eta = eta_dist(rng);
    const Matrix j = update_J(st, coupling_from_dictionaries(xi, dicts), cfg);
    Matrix grad = st.mu * (j - st.Z) - st.Y2;
    for (const Matrix& d : dicts) {
      const Matrix b = d.transpose() * xi;
      grad += cfg.eta * b.transpose() * (b * j);
    }
    worst = std::max(worst, grad.norm() / (1.0 + (st.mu * st.Z + st.Y2).norm()));
  }
  bool e_exact = true;
  for (int t = 0; t < 50; ++t) {
    const int m = rows(rng), n = cols(rng);
    const Matrix x = oracle::gaussian(m, n, rng);
    DlrrState st = DlrrState::initial(m, n, mu_dist(rng));
    st.Z = oracle::gaussian(n, n, rng);
    st.Y1 = oracle::gaussian(m, n, rng);
    SolverConfig cfg;
    cfg.lambda = mu_dist(rng);
    const Matrix e = update_E(st, ClassBlock{x, 1}, cfg);
    const Matrix q = x - x * st.Z + st.Y1 / st.mu;
    const double tau = cfg.lambda / st.mu;
    for (Eigen::Index c = 0; c < n; ++c) {
      const Vector expected = std::max(0.0, 1.0 - tau / q.col(c).norm()) * q.col(c);
      e_exact = e_exact && e.col(c) == expected;
    }
  }
  return {worst <= 1e-8 && e_exact,
          "worst relative J-stationarity residual " + num(worst) + ", E closed form " +
              (e_exact ? "bit-exact" : "MISMATCH") + " on 50 instances"};
}

// Shared scenario for criteria 3-5: 3 classes in R^100 (a 10x10 grid),
// rank 2, 20 samples per class, 10% of the columns with 2% random pixels.
struct RecoveryScenario {
  SynthData truth;
  SampleMatrix corrupted;
};

RecoveryScenario recovery_scenario(std::uint64_t seed) {
  SynthParams p;
  p.classes = 3;
  p.ambient_dim = 100;
  p.rank = 2;
  p.per_class = 20;
  p.noise = 0.01;
  p.rng_seed = seed;
  RecoveryScenario s{synth_multisubspace(p), {}};
  CorruptionSpec cs;
  cs.kind = CorruptionKind::pixel;
  cs.sample_fraction = 0.1;
  cs.per_image_extent = 0.02;
  cs.rng_seed = seed + 100;
  s.corrupted = corrupt(s.truth.observed, cs, ImageGeometry{10, 10});
  return s;
}

SolverConfig scenario_solver(double eta) {
  SolverConfig c;
  c.lambda = 0.5;
  c.eta = eta;
  return c;
}

// Runs the per-class solves in the same order and with the same couplings as
// recover_dictionary, checking both stopping conditions from the raw iterates.
Verdict criterion3() {
  const auto t0 = Clock::now();
  int ok = 0, total = 0, max_iters = 0;
  double worst_primal = 0.0, worst_consensus = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RecoveryScenario s = recovery_scenario(seed);
    const SolverConfig cfg = scenario_solver(0.001);
    const auto classes = s.corrupted.classes();
    std::vector<Matrix> dicts;
    for (int c : classes) dicts.push_back(s.corrupted.block(c));
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const Matrix x = s.corrupted.block(classes[c]);
      std::vector<Matrix> others;
      for (std::size_t o = 0; o < classes.size(); ++o) {
        if (o != c) others.push_back(dicts[o]);
      }
      const ClassSolution sol = solve_class(ClassBlock{x, classes[c]}, coupling_from_dictionaries(x, others), cfg);
      dicts[c] = x * sol.Z;
      const double primal = (x - x * sol.Z - sol.E).cwiseAbs().maxCoeff();
      const double consensus = (sol.Z - sol.J).cwiseAbs().maxCoeff();
      worst_primal = std::max(worst_primal, primal);
      worst_consensus = std::max(worst_consensus, consensus);
      max_iters = std::max(max_iters, sol.iterations);
      ++total;
      ok += primal < 1e-3 && consensus < 1e-3 && sol.iterations <= 500;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == total && secs < 60.0,
          std::to_string(ok) + "/" + std::to_string(total) + " class solves converged, max iterations " +
              std::to_string(max_iters) + ", worst primal " + num(worst_primal) + ", worst Z-J " +
              num(worst_consensus) + ", " + num(secs) + " s"};
}

Verdict criterion4() {
  double sum = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RecoveryScenario s = recovery_scenario(seed);
    const RecoveryResult r = recover_dictionary(s.corrupted, scenario_solver(0.001));
    const double err = (r.clean_dictionary - s.truth.clean).norm() / s.truth.clean.norm();
    sum += err;
    per_seed += (seed ? ", " : "") + num(err);
  }
  const double mean = sum / 5.0;
  return {mean < 0.1, "mean relative dictionary error " + num(mean) + " (seeds: " + per_seed + ")"};
}

Verdict criterion5() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RecoveryScenario s = recovery_scenario(seed);
    const double with = cross_class_coherence(recover_dictionary(s.corrupted, scenario_solver(0.001)).clean_dictionary,
                                              s.corrupted.labels);
    const double without = cross_class_coherence(
        recover_dictionary(s.corrupted, scenario_solver(0.0)).clean_dictionary, s.corrupted.labels);
    wins += with <= without;
    detail += (seed ? ", " : "") + num(with) + " vs " + num(without);
  }
  return {wins == 5, std::to_string(wins) + "/5 seeds with coherence(eta=0.001) <= coherence(eta=0): " + detail};
}

Verdict criterion6() {
  std::mt19937_64 rng(606);
  double worst_idem = 0.0, worst_fix = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index m = 10 + t, n = 4 + t % 7, r = 1 + t % 4;
    const Matrix x = t % 2 ? oracle::gaussian(m, n, rng) : Matrix(oracle::gaussian(m, r, rng) * oracle::gaussian(r, n, rng));
    const ProjectionMatrix p = learn_projection(x, x);
    const Matrix pm = p.materialize();
    worst_idem = std::max(worst_idem, (pm * pm - pm).norm() / pm.norm());
    for (Eigen::Index j = 0; j < n; ++j) {
      worst_fix = std::max(worst_fix, (p.apply(x.col(j)) - x.col(j)).norm() / x.col(j).norm());
    }
  }
  return {worst_idem <= 1e-8 && worst_fix <= 1e-6,
          "worst ||P^2-P||/||P|| " + num(worst_idem) + ", worst ||Px-x||/||x|| " + num(worst_fix) +
              " over 20 training sets"};
}

std::vector<int> balanced_labels(int classes, int per_class) {
  std::vector<int> l;
  for (int c = 1; c <= classes; ++c) l.insert(l.end(), static_cast<std::size_t>(per_class), c);
  return l;
}

Verdict criterion7() {
  std::mt19937_64 rng(707);
  double crc_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int classes = 2 + t % 4, per = 2 + t % 5;
    const Dictionary d(oracle::gaussian(12 + t % 9, classes * per, rng), balanced_labels(classes, per));
    const Vector y = oracle::gaussian(d.samples().rows(), 1, rng);
    const double beta = 0.1 + 0.02 * t;
    const Vector ref = oracle::ridge_stacked(d.samples(), y, beta);
    crc_worst = std::max(crc_worst, (crc_classify(d, y, beta).coefficients.values - ref).norm());
  }

  int nn_match = 0, lrc_match = 0;
  double lrc_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int classes = 2 + t % 4, per = 2 + t % 3;
    const std::vector<int> labels = balanced_labels(classes, per);
    const Dictionary d(oracle::gaussian(10, classes * per, rng), labels);
    const Vector y = oracle::gaussian(10, 1, rng);

    const Vector yn = y.normalized();
    double best = std::numeric_limits<double>::infinity();
    int nn_label = 0;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      const double dist = (yn - d.samples().col(j)).norm();
      if (dist < best) {
        best = dist;
        nn_label = labels[static_cast<std::size_t>(j)];
      }
    }
    nn_match += nn_classify(d, y).predicted_class == nn_label;

    const ClassificationOutcome lrc = lrc_classify(d, y);
    Vector res(classes);
    for (int c = 0; c < classes; ++c) {
      const Matrix xc = d.samples().middleCols(c * per, per);
      res(c) = (y - xc * oracle::least_squares(xc, y)).norm();
    }
    Eigen::Index arg = 0;
    res.minCoeff(&arg);
    lrc_match += lrc.predicted_class == static_cast<int>(arg) + 1;
    lrc_worst = std::max(lrc_worst, (lrc.per_class_residuals - res).cwiseAbs().maxCoeff());
  }

  double src_worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Dictionary d(oracle::gaussian(15, 25, rng), balanced_labels(5, 5));
    const Vector y = oracle::gaussian(15, 1, rng);
    SrcOptions opts;
    opts.lambda = 0.001;
    const Vector a = SrcClassifier(d, opts).code(y).alpha;
    const Vector ref = oracle::lasso_admm_reference(d.samples(), y, 0.001, 100000);
    src_worst = std::max(src_worst, std::abs(lasso_objective(d.samples(), y, a, 0.001) -
                                             lasso_objective(d.samples(), y, ref, 0.001)));
  }
  return {crc_worst <= 1e-8 && nn_match == 100 && lrc_match == 100 && lrc_worst <= 1e-8 && src_worst <= 1e-5,
          "crc coefficient error " + num(crc_worst) + " (100 dicts), nn " + std::to_string(nn_match) +
              "/100, lrc " + std::to_string(lrc_match) + "/100 (residual error " + num(lrc_worst) +
              "), src objective gap " + num(src_worst)};
}

const fs::path kBlockConfig = fs::path(DLRR_SOURCE_DIR) / "configs" / "synthetic_block_occlusion.cfg";

Verdict criterion8(ExperimentResults& kept) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = load_experiment_config(kBlockConfig.string());
  kept = run_experiment(cfg);
  const double secs = seconds_since(t0);
  bool ok = secs < 600.0;
  std::string detail;
  for (Eigen::Index dim : {10, 25, 50}) {
    const auto d = kept.mean_accuracy(Method::dlrr_cr, dim);
    const auto c = kept.mean_accuracy(Method::crc, dim);
    const auto n = kept.mean_accuracy(Method::nn, dim);
    if (!d || !c || !n) {
      ok = false;
      detail += "dim " + std::to_string(dim) + ": missing cells; ";
      continue;
    }
    ok = ok && *d >= *c && *d >= *n;
    detail += "dim " + std::to_string(dim) + ": dlrr-cr " + num(*d) + " crc " + num(*c) + " nn " + num(*n) + "; ";
  }
  return {ok, detail + num(secs) + " s"};
}

Verdict criterion9(const ExperimentResults& first) {
  const fs::path base = fs::temp_directory_path() / "dlrr_acceptance_determinism";
  fs::remove_all(base);
  const ExperimentConfig cfg = load_experiment_config(kBlockConfig.string());
  write_results(base / "a", first);
  write_results(base / "b", run_experiment(cfg));
  int same = 0, files = 0;
  for (const char* f : {"results_long.csv", "results_mean.csv", "results_table.csv", "failures.csv"}) {
    ++files;
    const std::string a = slurp(base / "a" / f), b = slurp(base / "b" / f);
    same += !a.empty() && a == b;
  }
  return {same == files, std::to_string(same) + "/" + std::to_string(files) + " benchmark CSVs byte-identical"};
}

Verdict criterion10() {
  const fs::path base = fs::temp_directory_path() / "dlrr_acceptance_ar";
  fs::remove_all(base);
  const fs::path manifest = oracle::make_fake_ar(base / "images", 15, 12, 10, 1010);
  bool ok = true;
  std::string detail;
  const std::vector<std::tuple<std::string, SplitProtocol, std::size_t, std::size_t>> protocols = {
      {"ar-sunglasses", SplitProtocol::ar_sunglasses, 8, 12},
      {"ar-scarf", SplitProtocol::ar_scarf, 8, 12},
      {"ar-sunglasses-scarf", SplitProtocol::ar_sunglasses_scarf, 9, 17}};
  for (const auto& [name, protocol, tr, te] : protocols) {
    std::istringstream text("[data]\nsource = manifest\nmanifest = " + manifest.string() + "\nsplit = " + name +
                            "\n[experiment]\nmethods = dlrr-cr, crc, nn\ndims = 25\nseeds = 1\n"
                            "[solver]\nlambda = 1\n");
    KvConfig kv = KvConfig::parse(text);
    const ExperimentConfig cfg = read_experiment_config(kv);
    const PreparedData d = split_pool(cfg, load_pool(cfg), 1);
    for (int label : d.train.classes()) {
      ok = ok && d.train.columns_of(label).size() == tr && d.test.columns_of(label).size() == te;
    }
    const ExperimentResults r = run_experiment(cfg);
    const fs::path out = base / name;
    write_results(out, r);
    const auto table = lines_of(slurp(out / "results_table.csv"));
    const auto reference = lines_of(slurp(out / "reference_comparison.csv"));
    ok = ok && table.size() == 4 && table[0] == "method,25" && reference.size() == 4 &&
         reference[0] == "method,dim,reference_percent,observed_percent";
    for (const auto& c : r.cells) ok = ok && c.accuracy.has_value();
    const auto ref = ar_reference_accuracy(protocol, Method::dlrr_cr, 25);
    const auto obs = r.mean_accuracy(Method::dlrr_cr, 25);
    detail += name + " " + std::to_string(tr) + "/" + std::to_string(te) + " per subject, dlrr-cr@25 observed " +
              (obs ? num(100.0 * *obs) : "nan") + "% vs reported " + (ref ? num(*ref) : "nan") + "%; ";
  }
  const auto headline = ar_reference_accuracy(SplitProtocol::ar_sunglasses, Method::dlrr_cr, 200);
  ok = ok && headline && *headline == 92.00;
  return {ok, detail + "sunglasses dlrr-cr@200 reference " + (headline ? num(*headline) : "missing") + "%"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail << std::endl;
  };
  ExperimentResults sweep;
  report(1, criterion1);
  report(2, criterion2);
  report(3, criterion3);
  report(4, criterion4);
  report(5, criterion5);
  report(6, criterion6);
  report(7, criterion7);
  report(8, [&] { return criterion8(sweep); });
  report(9, [&] { return criterion9(sweep); });
  report(10, criterion10);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
