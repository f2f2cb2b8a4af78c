#ifndef DLRR_LRR_SOLVER_HPP
#define DLRR_LRR_SOLVER_HPP

// Class-wise discriminative low-rank representation solved by inexact ALM.
//
// For each class block X_i the solver minimizes
//
//   ||Z_i||_* + lambda ||E_i||_{2,1} + eta/2 sum_{j != i} ||(X_j Z_j)^T X_i J_i||_F^2
//   s.t. X_i = X_i Z_i + E_i,  Z_i = J_i
//
// with a linearized nuclear-norm step for Z, a closed-form linear solve for
// J and column-wise l2,1 shrinkage for E. With eta = 0 it is plain LRR on
// one class. The clean dictionary is D = [X_1 Z_1, ..., X_N Z_N].

#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dlrr/linalg.hpp"
#include "dlrr/sample_matrix.hpp"

namespace dlrr {

struct SolverConfig {
  double lambda = 0.02;    // weight of the l2,1 error term
  double eta = 0.001;      // weight of the structural incoherence term
  double mu0 = 1e-6;
  double rho_growth = 1.1;
  double mu_max = 1e10;
  double epsilon = 1e-3;
  int max_iter = 500;
  int outer_passes = 1;    // sweeps over all classes; coupling refreshes per sweep

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("solver: lambda must be positive");
    if (!(eta >= 0.0)) throw ConfigError("solver: eta must be nonnegative");
    if (!(mu0 > 0.0)) throw ConfigError("solver: mu0 must be positive");
    if (!(rho_growth > 1.0)) throw ConfigError("solver: rho_growth must exceed 1");
    if (!(mu_max >= mu0)) throw ConfigError("solver: mu_max must be >= mu0");
    if (!(epsilon > 0.0)) throw ConfigError("solver: epsilon must be positive");
    if (max_iter < 1) throw ConfigError("solver: max_iter must be positive");
    if (outer_passes < 1) throw ConfigError("solver: outer_passes must be positive");
  }
};

struct ClassBlock {
  Matrix data;  // m x n_i
  int class_id = 0;
};

/// Iterate of the inner ALM loop for one class.
struct DlrrState {
  Matrix Z;   // n_i x n_i
  Matrix J;   // n_i x n_i
  Matrix E;   // m x n_i
  Matrix Y1;  // m x n_i
  Matrix Y2;  // n_i x n_i
  double mu = 0.0;
  int iter = 0;

  static DlrrState initial(Eigen::Index m, Eigen::Index n, double mu0) {
    DlrrState s;
    s.Z = Matrix::Zero(n, n);
    s.J = Matrix::Zero(n, n);
    s.E = Matrix::Zero(m, n);
    s.Y1 = Matrix::Zero(m, n);
    s.Y2 = Matrix::Zero(n, n);
    s.mu = mu0;
    return s;
  }
};

/// Cross-class coupling for class i: C_i = sum_{j != i} B_j^T B_j with
/// B_j = (X_j Z_j)^T X_i. Fixed for the duration of one class solve.
struct Coupling {
  Matrix gram;  // n_i x n_i, symmetric positive semidefinite
};

inline Coupling coupling_from_blocks(Eigen::Index n_i, std::span<const Matrix> b_blocks) {
  Coupling c{Matrix::Zero(n_i, n_i)};
  for (const Matrix& b : b_blocks) {
    if (b.cols() != n_i) {
      throw DataError("coupling block has " + std::to_string(b.cols()) +
                      " columns, expected " + std::to_string(n_i));
    }
    c.gram.noalias() += b.transpose() * b;
  }
  return c;
}

/// Coupling from the current clean dictionaries D_j = X_j Z_j of the other classes.
inline Coupling coupling_from_dictionaries(const MatrixRef& x_i,
                                           std::span<const Matrix> others) {
  std::vector<Matrix> blocks;
  blocks.reserve(others.size());
  for (const Matrix& d : others) {
    if (d.rows() != x_i.rows()) throw DataError("coupling dictionary row mismatch");
    blocks.push_back(d.transpose() * x_i);
  }
  return coupling_from_blocks(x_i.cols(), blocks);
}

/// Linearization constant: Lipschitz constant of grad f / mu.
inline double linearization_constant(const MatrixRef& x_i) {
  const double s = spectral_norm(x_i);
  return s * s + 1.0;
}

inline Matrix z_gradient(const DlrrState& st, const MatrixRef& x) {
  const Matrix r = x - x * st.Z - st.E + st.Y1 / st.mu;
  return st.mu * (-(x.transpose() * r) + (st.Z - st.J + st.Y2 / st.mu));
}

inline Matrix update_Z(const DlrrState& st, const ClassBlock& block, double sigma) {
  const double step = 1.0 / (st.mu * sigma);
  const Matrix arg = st.Z - step * z_gradient(st, block.data);
  if (!arg.allFinite() || !std::isfinite(step)) {
    throw SolverError("update_Z: gradient step is not finite");
  }
  return svt(arg, step);
}

inline Matrix update_Z(const DlrrState& st, const ClassBlock& block) {
  return update_Z(st, block, linearization_constant(block.data));
}

/// Exact minimizer of the J-subproblem: (eta C + mu I) J = mu Z + Y2.
inline Matrix update_J(const DlrrState& st, const Coupling& coupling, const SolverConfig& cfg) {
  const Eigen::Index n = st.Z.rows();
  const Matrix rhs = st.mu * st.Z + st.Y2;
  if (cfg.eta == 0.0 || coupling.gram.size() == 0) return rhs / st.mu;
  Matrix lhs = cfg.eta * coupling.gram;
  lhs.diagonal().array() += st.mu;
  Eigen::LLT<Matrix> llt(lhs);
  if (llt.info() != Eigen::Success) {
    throw SolverError("update_J: system of size " + std::to_string(n) +
                      " is not positive definite");
  }
  return llt.solve(rhs);
}

inline Matrix update_E(const DlrrState& st, const ClassBlock& block, const SolverConfig& cfg) {
  const Matrix& x = block.data;
  return shrink_l21(x - x * st.Z + st.Y1 / st.mu, cfg.lambda / st.mu);
}

/// ||Z||_* + lambda ||E||_{2,1} + eta/2 tr(J^T C J).
inline double dlrr_objective(const MatrixRef& z, const MatrixRef& e, const MatrixRef& j,
                             const Coupling& coupling, const SolverConfig& cfg) {
  double obj = nuclear_norm(z) + cfg.lambda * l21_norm(e);
  if (cfg.eta != 0.0 && coupling.gram.size() != 0) {
    obj += 0.5 * cfg.eta * (j.transpose() * coupling.gram * j).trace();
  }
  return obj;
}

struct IterationRecord {
  int class_id = 0;
  int iter = 0;
  double mu = 0.0;
  double primal_inf = 0.0;     // ||X - XZ - E||_inf
  double consensus_inf = 0.0;  // ||Z - J||_inf
  double primal_fro = 0.0;     // ||X - XZ - E||_F
  double objective = 0.0;
};

using TraceSink = std::function<void(const IterationRecord&)>;

inline void write_trace_header(std::ostream& os) {
  os << "class_id,iter,mu,primal_inf,consensus_inf,primal_fro,objective\n";
}

/// Sink that writes one CSV line per iteration (no header).
inline TraceSink csv_trace_sink(std::ostream& os) {
  return [&os](const IterationRecord& r) {
    os << r.class_id << ',' << r.iter << ',' << r.mu << ',' << r.primal_inf << ','
       << r.consensus_inf << ',' << r.primal_fro << ',' << r.objective << '\n';
  };
}

struct ClassSolution {
  int class_id = 0;
  Matrix Z;
  Matrix E;
  Matrix J;
  int iterations = 0;
  bool converged = false;  // false means max_iter was hit
  double primal_inf = 0.0;
  double consensus_inf = 0.0;
  std::vector<double> objective_trace;
  std::vector<double> primal_fro_trace;
};

inline ClassSolution solve_class(const ClassBlock& block, const Coupling& coupling,
                                 const SolverConfig& cfg, const TraceSink& sink = {}) {
  cfg.validate();
  const Matrix& x = block.data;
  if (x.cols() < 1) {
    throw DataError("class " + std::to_string(block.class_id) + " has no samples");
  }
  require_finite(x, "class block");
  const Eigen::Index n = x.cols();
  if (coupling.gram.size() != 0 && (coupling.gram.rows() != n || coupling.gram.cols() != n)) {
    throw DataError("coupling gram has wrong shape for class " + std::to_string(block.class_id));
  }

  const double sigma = linearization_constant(x);
  DlrrState st = DlrrState::initial(x.rows(), n, cfg.mu0);
  ClassSolution out;
  out.class_id = block.class_id;

  while (st.iter < cfg.max_iter) {
    try {
      st.Z = update_Z(st, block, sigma);
      st.J = update_J(st, coupling, cfg);
      st.E = update_E(st, block, cfg);
    } catch (const Error& e) {
      throw SolverError("class " + std::to_string(block.class_id) + ": iterate diverged at iteration " +
                        std::to_string(st.iter + 1) + ": " + e.what());
    }

    const Matrix primal = x - x * st.Z - st.E;
    const Matrix consensus = st.Z - st.J;
    st.Y1 += st.mu * primal;
    st.Y2 += st.mu * consensus;
    st.mu = std::min(cfg.rho_growth * st.mu, cfg.mu_max);
    ++st.iter;

    if (!st.Z.allFinite() || !st.J.allFinite() || !st.E.allFinite() ||
        !st.Y1.allFinite() || !st.Y2.allFinite()) {
      throw SolverError("class " + std::to_string(block.class_id) +
                        ": iterate diverged at iteration " + std::to_string(st.iter));
    }

    IterationRecord rec;
    rec.class_id = block.class_id;
    rec.iter = st.iter;
    rec.mu = st.mu;
    rec.primal_inf = primal.cwiseAbs().maxCoeff();
    rec.consensus_inf = consensus.cwiseAbs().maxCoeff();
    rec.primal_fro = primal.norm();
    rec.objective = dlrr_objective(st.Z, st.E, st.J, coupling, cfg);
    out.objective_trace.push_back(rec.objective);
    out.primal_fro_trace.push_back(rec.primal_fro);
    out.primal_inf = rec.primal_inf;
    out.consensus_inf = rec.consensus_inf;
    if (sink) sink(rec);

    if (rec.primal_inf < cfg.epsilon && rec.consensus_inf < cfg.epsilon) {
      out.converged = true;
      break;
    }
  }

  out.iterations = st.iter;
  out.Z = std::move(st.Z);
  out.E = std::move(st.E);
  out.J = std::move(st.J);
  return out;
}

struct RecoveryResult {
  std::vector<int> class_ids;        // ascending
  std::vector<Matrix> per_class_Z;
  std::vector<Matrix> per_class_E;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<std::vector<double>> objective_trace;
  // Column j is the recovered version of input column j, so the matrix
  // equals [X_1 Z_1, ..., X_N Z_N] up to the input's column order.
  Matrix clean_dictionary;

  bool all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
  }
};

inline RecoveryResult recover_dictionary(const SampleMatrix& x, const SolverConfig& cfg,
                                         const TraceSink& sink = {}) {
  cfg.validate();
  x.validate();
  if (x.empty()) throw DataError("recover_dictionary: no training samples");

  const std::vector<int> classes = x.classes();
  const std::size_t nc = classes.size();
  std::vector<ClassBlock> blocks(nc);
  std::vector<std::vector<Eigen::Index>> cols(nc);
  std::vector<Matrix> dicts(nc);  // current D_j = X_j Z_j; identity Z_j to start
  for (std::size_t c = 0; c < nc; ++c) {
    cols[c] = x.columns_of(classes[c]);
    blocks[c] = ClassBlock{x.data(Eigen::all, cols[c]), classes[c]};
    dicts[c] = blocks[c].data;
  }

  RecoveryResult res;
  res.class_ids = classes;
  res.per_class_Z.resize(nc);
  res.per_class_E.resize(nc);
  res.iterations.assign(nc, 0);
  res.converged.assign(nc, false);
  res.objective_trace.resize(nc);

  for (int pass = 0; pass < cfg.outer_passes; ++pass) {
    for (std::size_t c = 0; c < nc; ++c) {
      Coupling coupling{Matrix::Zero(0, 0)};
      if (cfg.eta != 0.0 && nc > 1) {
        std::vector<Matrix> others;
        others.reserve(nc - 1);
        for (std::size_t o = 0; o < nc; ++o) {
          if (o != c) others.push_back(dicts[o]);
        }
        coupling = coupling_from_dictionaries(blocks[c].data, others);
      }
      ClassSolution sol;
      try {
        sol = solve_class(blocks[c], coupling, cfg, sink);
      } catch (const SolverError& e) {
        throw SolverError("recover_dictionary: class " + std::to_string(classes[c]) +
                          ": " + e.what());
      }
      dicts[c] = blocks[c].data * sol.Z;
      res.per_class_Z[c] = std::move(sol.Z);
      res.per_class_E[c] = std::move(sol.E);
      res.iterations[c] = sol.iterations;
      res.converged[c] = sol.converged;
      res.objective_trace[c] = std::move(sol.objective_trace);
    }
  }

  res.clean_dictionary.resize(x.rows(), x.cols());
  for (std::size_t c = 0; c < nc; ++c) {
    res.clean_dictionary(Eigen::all, cols[c]) = dicts[c];
  }
  return res;
}

/// sum_{i != j} ||D_j^T D_i||_F^2 over the class blocks of a dictionary.
inline double cross_class_coherence(const MatrixRef& dictionary, const std::vector<int>& labels) {
  SampleMatrix view(dictionary, labels);
  const std::vector<int> classes = view.classes();
  std::vector<Matrix> blocks;
  for (int c : classes) blocks.push_back(view.block(c));
  double total = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      if (i != j) total += (blocks[j].transpose() * blocks[i]).squaredNorm();
    }
  }
  return total;
}

}  // namespace dlrr

#endif  // DLRR_LRR_SOLVER_HPP
