#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hmcd/align.hpp"
#include "hmcd/dataset.hpp"
#include "hmcd/rng.hpp"
#include "hmcd/types.hpp"

namespace hmcd {

// Weights of the four objective terms for one (network, attribute) block:
// full-network reconstruction, overlap reconstruction, overlap consistency and
// agreement with the consensus matrix.
struct TermWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.01;
  double theta = 0.1;

  bool operator==(const TermWeights&) const = default;
};

struct Hyperparameters {
  std::size_t k = 2;
  TermWeights defaults;
  std::map<std::pair<std::string, AttributeKind>, TermWeights> overrides;
  std::size_t inner_max_iters = 100;
  std::size_t outer_max_iters = 50;
  double rel_tol = 1e-6;
  double guard_eps = 1e-12;
  std::uint64_t seed = 0;
  // When a plain sweep raises the block objective, redo it from the saved
  // factors with every step backtracked (power halved until it does not
  // raise). The X rules treat Q as fixed although it moves with X, so plain
  // sweeps occasionally go up by ~1e-5 relative.
  bool monotone_guard = true;
  // Added to the diagonal of the uniform D, D_o draws. Zero gives the plain
  // uniform start, which often settles on role-like splits where one column
  // only sends and the others only receive.
  double relation_diagonal = 1.0;
  // Rescale the random D, D_o to the adjacency mass and start C from the
  // consensus update instead of raw uniform draws.
  bool scaled_init = true;

  TermWeights weights(const std::string& network, AttributeKind kind) const {
    auto it = overrides.find({network, kind});
    return it == overrides.end() ? defaults : it->second;
  }

  void validate() const {
    if (k < 2) throw InputError("K must be at least 2");
    if (!(rel_tol > 0.0)) throw InputError("rel_tol must be positive");
    if (!(guard_eps > 0.0)) throw InputError("guard_eps must be positive");
    auto check = [](const TermWeights& w) {
      for (double v : {w.alpha, w.beta, w.gamma, w.theta})
        if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("term weights must be >= 0");
    };
    check(defaults);
    for (const auto& [key, w] : overrides) check(w);
    if (!(relation_diagonal >= 0.0) || !std::isfinite(relation_diagonal))
      throw InputError("relation_diagonal must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Adjacency normalization

struct NormalizedAdjacency {
  Matrix matrix;
  bool all_zero = false;
};

// Row-normalize every nonzero row, then scale the whole matrix to unit sum.
// An all-zero matrix is returned unchanged and flagged.
inline NormalizedAdjacency normalize_adjacency(const Matrix& m) {
  NormalizedAdjacency out{m, false};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double r = m.row(i).sum();
    if (r > 0.0) out.matrix.row(i) /= r;
  }
  const double total = out.matrix.sum();
  if (total > 0.0)
    out.matrix /= total;
  else
    out.all_zero = true;
  return out;
}

// ---------------------------------------------------------------------------
// Problem: the normalized inputs of every (network, attribute) block.

struct BlockProblem {
  std::size_t network = 0;
  AttributeKind kind = AttributeKind::topology;
  Matrix m;    // normalized adjacency, n_s x n_s
  Matrix m_o;  // normalized overlap adjacency, n_so x n_so
  AlignmentH h;
  AlignmentT t;
  TermWeights w;
  bool empty = false;  // M and M_o both all zero: nothing to fit, never updated
};

struct Problem {
  std::size_t global_users = 0;
  std::size_t k = 0;
  std::vector<BlockProblem> blocks;
  std::vector<std::string> warnings;
};

inline Problem prepare_problem(const MultiNetworkDataset& ds, const Hyperparameters& hyper) {
  validate(ds);
  hyper.validate();
  if (ds.networks.empty()) throw InputError("dataset has no networks");
  Problem p;
  p.global_users = ds.global_users.size();
  p.k = hyper.k;
  for (std::size_t s = 0; s < ds.networks.size(); ++s) {
    const auto& net = ds.networks[s];
    const auto h = build_H(net);
    const auto t = build_T(net, ds.global_users);
    for (const auto& [kind, m] : net.adjacency) {
      BlockProblem b;
      b.network = s;
      b.kind = kind;
      auto nm = normalize_adjacency(m);
      auto nmo = normalize_adjacency(net.overlap_adjacency.at(kind));
      const std::string tag = "network '" + net.id + "' " + std::string(to_string(kind));
      if (nm.all_zero) p.warnings.push_back(tag + ": adjacency is all zero");
      if (nmo.all_zero && net.overlap_size() > 0)
        p.warnings.push_back(tag + ": overlap adjacency is all zero");
      b.empty = nm.all_zero && (nmo.all_zero || net.overlap_size() == 0);
      if (b.empty) p.warnings.push_back(tag + ": nothing to fit, factors stay at their start");
      b.m = std::move(nm.matrix);
      b.m_o = std::move(nmo.matrix);
      b.h = h;
      b.t = t;
      b.w = hyper.weights(net.id, kind);
      p.blocks.push_back(std::move(b));
    }
  }
  if (p.blocks.empty()) throw InputError("dataset has no adjacency matrices");
  return p;
}

// ---------------------------------------------------------------------------
// Factor state

struct FactorBlock {
  Matrix x;    // n_s x K
  Matrix x_o;  // n_so x K
  Matrix d;    // K x K
  Matrix d_o;  // K x K
};

struct FactorizationState {
  std::vector<FactorBlock> blocks;  // parallel to Problem::blocks
  Matrix c;                         // n x K
};

// Uniform in [1e-6, 1): strictly positive so every entry can move.
inline FactorizationState initialize_state(const Problem& p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  const auto k = static_cast<Eigen::Index>(p.k);
  auto fill = [&](Eigen::Index rows) {
    Matrix m(rows, k);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rng.uniform(1e-6, 1.0);
    return m;
  };
  FactorizationState st;
  for (const auto& b : p.blocks) {
    FactorBlock f;
    f.x = fill(b.m.rows());
    f.x_o = fill(b.m_o.rows());
    f.d = fill(k);
    f.d_o = fill(k);
    st.blocks.push_back(std::move(f));
  }
  st.c = fill(static_cast<Eigen::Index>(p.global_users));
  return st;
}

// ---------------------------------------------------------------------------
// Normalization matrices

// Diagonal of Q: column sums of X * D. Zero sums are replaced by guard_eps.
inline Vector compute_Q(const Matrix& x, const Matrix& d, double guard_eps) {
  Vector q = (x * d).colwise().sum().transpose();
  for (Eigen::Index l = 0; l < q.size(); ++l)
    if (!(q[l] > 0.0)) q[l] = guard_eps;
  return q;
}

inline Vector compute_Q_o(const Matrix& x_o, const Matrix& d_o, double guard_eps) {
  return compute_Q(x_o, d_o, guard_eps);
}

// X <- X Q, D <- Q^-1 D Q^-1. Leaves X D X^T unchanged and makes the columns
// of X D sum to one.
inline std::pair<Matrix, Matrix> apply_normalization(const Matrix& x, const Matrix& d,
                                                     double guard_eps) {
  const Vector q = compute_Q(x, d, guard_eps);
  const Vector qinv = q.cwiseInverse();
  return {x * q.asDiagonal(), qinv.asDiagonal() * d * qinv.asDiagonal()};
}

inline void normalize_full(FactorBlock& f, double guard_eps) {
  std::tie(f.x, f.d) = apply_normalization(f.x, f.d, guard_eps);
}

inline void normalize_overlap(FactorBlock& f, double guard_eps) {
  std::tie(f.x_o, f.d_o) = apply_normalization(f.x_o, f.d_o, guard_eps);
}

// ---------------------------------------------------------------------------
// Objective

struct ObjectiveTerms {
  double reconstruction = 0.0;          // alpha-weighted
  double overlap_reconstruction = 0.0;  // beta-weighted
  double overlap_consistency = 0.0;     // gamma-weighted
  double consensus = 0.0;               // theta-weighted

  double total() const {
    return reconstruction + overlap_reconstruction + overlap_consistency + consensus;
  }
};

inline ObjectiveTerms block_objective_terms(const BlockProblem& b, const FactorBlock& f,
                                            const Matrix& c, double guard_eps) {
  const Vector q = compute_Q(f.x, f.d, guard_eps);
  const Vector q_o = compute_Q_o(f.x_o, f.d_o, guard_eps);
  const Matrix xq = f.x * q.asDiagonal();
  ObjectiveTerms t;
  if (b.w.alpha != 0.0)
    t.reconstruction = b.w.alpha * (b.m - f.x * f.d * f.x.transpose()).squaredNorm();
  if (b.w.beta != 0.0 && f.x_o.rows() > 0)
    t.overlap_reconstruction =
        b.w.beta * (b.m_o - f.x_o * f.d_o * f.x_o.transpose()).squaredNorm();
  if (b.w.gamma != 0.0 && f.x_o.rows() > 0)
    t.overlap_consistency =
        b.w.gamma * (b.h.gather(xq) - f.x_o * q_o.asDiagonal()).squaredNorm();
  if (b.w.theta != 0.0) t.consensus = b.w.theta * (xq - b.t.gather(c)).squaredNorm();
  return t;
}

// The (network, attribute) summand of the full objective; the consensus term
// uses the given C.
inline double block_objective(const BlockProblem& b, const FactorBlock& f, const Matrix& c,
                              double guard_eps) {
  return block_objective_terms(b, f, c, guard_eps).total();
}

inline double objective(const Problem& p, const FactorizationState& st, double guard_eps) {
  if (st.blocks.size() != p.blocks.size()) throw InputError("objective: block count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    total += block_objective(p.blocks[i], st.blocks[i], st.c, guard_eps);
  return total;
}

// ---------------------------------------------------------------------------
// Multiplicative updates. Each returns the elementwise ratio f0 / f1 and the
// update itself is factor .* ratio^power. Entries whose denominator is below
// guard_eps get ratio 1, i.e. stay put. Flooring the denominator at eps
// instead shrinks the step below the exact one once factors are badly scaled
// (D_o entries of 1e12 after normalization happen) and raises the objective.

namespace detail {

inline void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw SolverError(0, std::string("non-finite entry in ") + what);
}

inline Matrix guarded_ratio(const Matrix& f0, const Matrix& f1, double guard_eps) {
  return (f1.array() >= guard_eps).select(f0.array() / f1.array(), 1.0);
}

inline Matrix apply_ratio(const Matrix& factor, const Matrix& ratio, double power) {
  return factor.array() * ratio.array().pow(power);
}

}  // namespace detail

inline constexpr double kFactorPower = 0.25;    // fourth root for X, X_o
inline constexpr double kRelationPower = 0.5;   // square root for D, D_o

inline Matrix update_X_ratio(const BlockProblem& b, const FactorBlock& f, const Matrix& c,
                             double guard_eps) {
  detail::require_finite(f.x, "X");
  detail::require_finite(f.d, "D");
  const auto& w = b.w;
  const Matrix xd = f.x * f.d;
  const Matrix xdt = f.x * f.d.transpose();
  const Matrix g = f.x.transpose() * f.x;
  Matrix f0 = w.alpha * (b.m.transpose() * xd + b.m * xdt);
  Matrix f1 = w.alpha * (f.x * (f.d.transpose() * g * f.d + f.d * g * f.d.transpose()));
  if (w.gamma != 0.0 && f.x_o.rows() > 0) {
    const Vector q_o = compute_Q_o(f.x_o, f.d_o, guard_eps);
    f0 += w.gamma * b.h.scatter(f.x_o * q_o.asDiagonal());
    f1 += w.gamma * b.h.mask(f.x);
  }
  if (w.theta != 0.0) {
    f0 += w.theta * b.t.gather(c);
    f1 += w.theta * f.x;
  }
  return detail::guarded_ratio(f0, f1, guard_eps);
}

inline Matrix update_X(const BlockProblem& b, const FactorBlock& f, const Matrix& c,
                       double guard_eps) {
  return detail::apply_ratio(f.x, update_X_ratio(b, f, c, guard_eps), kFactorPower);
}

inline Matrix update_X_o_ratio(const BlockProblem& b, const FactorBlock& f, double guard_eps) {
  detail::require_finite(f.x_o, "X_o");
  detail::require_finite(f.d_o, "D_o");
  const auto& w = b.w;
  const Matrix xd = f.x_o * f.d_o;
  const Matrix xdt = f.x_o * f.d_o.transpose();
  const Matrix g = f.x_o.transpose() * f.x_o;
  Matrix f0 = w.beta * (b.m_o.transpose() * xd + b.m_o * xdt);
  Matrix f1 =
      w.beta * (f.x_o * (f.d_o.transpose() * g * f.d_o + f.d_o * g * f.d_o.transpose()));
  if (w.gamma != 0.0) {
    const Vector q = compute_Q(f.x, f.d, guard_eps);
    f0 += w.gamma * b.h.gather(f.x * q.asDiagonal());
    f1 += w.gamma * f.x_o;
  }
  return detail::guarded_ratio(f0, f1, guard_eps);
}

inline Matrix update_X_o(const BlockProblem& b, const FactorBlock& f, double guard_eps) {
  return detail::apply_ratio(f.x_o, update_X_o_ratio(b, f, guard_eps), kFactorPower);
}

// The gamma and theta parts differentiate through Q = colsum(X D), whose
// derivative in D(m, n) is colsum(X)(m).
inline Matrix update_D_ratio(const BlockProblem& b, const FactorBlock& f, const Matrix& c,
                             double guard_eps) {
  detail::require_finite(f.x, "X");
  detail::require_finite(f.d, "D");
  const auto& w = b.w;
  const Matrix g = f.x.transpose() * f.x;
  Matrix f0 = w.alpha * (f.x.transpose() * b.m * f.x);
  Matrix f1 = w.alpha * (g * f.d * g);
  const Vector colsum = f.x.colwise().sum().transpose();
  const Vector q = compute_Q(f.x, f.d, guard_eps);
  if (w.gamma != 0.0 && f.x_o.rows() > 0) {
    const Vector q_o = compute_Q_o(f.x_o, f.d_o, guard_eps);
    const Matrix hx = b.h.gather(f.x);
    const Vector pos = (hx.array() * f.x_o.array()).colwise().sum().transpose().matrix().cwiseProduct(q_o);
    const Vector neg = hx.array().square().colwise().sum().transpose().matrix().cwiseProduct(q);
    f0 += w.gamma * colsum * pos.transpose();
    f1 += w.gamma * colsum * neg.transpose();
  }
  if (w.theta != 0.0) {
    const Matrix tc = b.t.gather(c);
    const Vector pos = (f.x.array() * tc.array()).colwise().sum().transpose().matrix();
    const Vector neg = f.x.array().square().colwise().sum().transpose().matrix().cwiseProduct(q);
    f0 += w.theta * colsum * pos.transpose();
    f1 += w.theta * colsum * neg.transpose();
  }
  return detail::guarded_ratio(f0, f1, guard_eps);
}

inline Matrix update_D(const BlockProblem& b, const FactorBlock& f, const Matrix& c,
                       double guard_eps) {
  return detail::apply_ratio(f.d, update_D_ratio(b, f, c, guard_eps), kRelationPower);
}

inline Matrix update_D_o_ratio(const BlockProblem& b, const FactorBlock& f, double guard_eps) {
  detail::require_finite(f.x_o, "X_o");
  detail::require_finite(f.d_o, "D_o");
  const auto& w = b.w;
  const Matrix g = f.x_o.transpose() * f.x_o;
  Matrix f0 = w.beta * (f.x_o.transpose() * b.m_o * f.x_o);
  Matrix f1 = w.beta * (g * f.d_o * g);
  if (w.gamma != 0.0) {
    const Vector colsum = f.x_o.colwise().sum().transpose();
    const Vector q = compute_Q(f.x, f.d, guard_eps);
    const Vector q_o = compute_Q_o(f.x_o, f.d_o, guard_eps);
    const Matrix hx = b.h.gather(f.x);
    const Vector pos = (hx.array() * f.x_o.array()).colwise().sum().transpose().matrix().cwiseProduct(q);
    const Vector neg = f.x_o.array().square().colwise().sum().transpose().matrix().cwiseProduct(q_o);
    f0 += w.gamma * colsum * pos.transpose();
    f1 += w.gamma * colsum * neg.transpose();
  }
  return detail::guarded_ratio(f0, f1, guard_eps);
}

inline Matrix update_D_o(const BlockProblem& b, const FactorBlock& f, double guard_eps) {
  return detail::apply_ratio(f.d_o, update_D_o_ratio(b, f, guard_eps), kRelationPower);
}

// Closed-form minimizer of sum theta ||X Q - T C||^2 over C. Rows of global
// users covered by no block (zero denominator) are zeroed and reported.
inline Matrix update_C(const Problem& p, const FactorizationState& st, double guard_eps,
                       std::vector<std::size_t>* uncovered = nullptr) {
  const auto n = static_cast<Eigen::Index>(p.global_users);
  const auto k = static_cast<Eigen::Index>(p.k);
  Matrix num = Matrix::Zero(n, k);
  Vector den = Vector::Zero(n);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const auto& b = p.blocks[i];
    const auto& f = st.blocks[i];
    if (b.w.theta == 0.0) continue;
    detail::require_finite(f.x, "X");
    const Vector q = compute_Q(f.x, f.d, guard_eps);
    num += b.w.theta * b.t.scatter(f.x * q.asDiagonal());
    den += b.w.theta * b.t.coverage();
  }
  if (uncovered) uncovered->clear();
  for (Eigen::Index m = 0; m < n; ++m) {
    if (den[m] > 0.0) {
      num.row(m) /= den[m];
    } else {
      num.row(m).setZero();
      if (uncovered) uncovered->push_back(static_cast<std::size_t>(m));
    }
  }
  return num;
}

// Scales D (and D_o) so that X D X^T carries the same total mass as the
// normalized adjacency (zero for an all-zero block), then sets C by the
// consensus update. Uniform draws in
// (0, 1) otherwise start the reconstruction n^2 K / 8 times too heavy.
inline void rescale_initial_state(const Problem& p, FactorizationState& st, double guard_eps) {
  auto rescale = [](const Matrix& m, const Matrix& x, Matrix& d) {
    const double mass = m.sum();
    const Vector colsum = x.colwise().sum().transpose();
    const double recon = colsum.dot(d * colsum);
    if (recon > 0.0) d *= mass / recon;
  };
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    rescale(p.blocks[i].m, st.blocks[i].x, st.blocks[i].d);
    if (st.blocks[i].x_o.rows() > 0) rescale(p.blocks[i].m_o, st.blocks[i].x_o, st.blocks[i].d_o);
  }
  st.c = update_C(p, st, guard_eps);
}

// The solver's starting point: uniform draws, the diagonal shift on D and D_o,
// then (optionally) the mass rescaling.
inline FactorizationState starting_state(const Problem& p, const Hyperparameters& hyper) {
  auto st = initialize_state(p, hyper.seed);
  if (hyper.relation_diagonal != 0.0)
    for (auto& f : st.blocks) {
      f.d.diagonal().array() += hyper.relation_diagonal;
      f.d_o.diagonal().array() += hyper.relation_diagonal;
    }
  if (hyper.scaled_init) rescale_initial_state(p, st, hyper.guard_eps);
  return st;
}

// ---------------------------------------------------------------------------
// Hard assignment

// Row-wise argmax, ties to the lowest index. All-zero rows get label 0 and are
// reported through `zero_rows`.
inline Partition assign_communities(const Matrix& f, std::vector<std::size_t>* zero_rows = nullptr) {
  Partition part;
  part.k = static_cast<std::size_t>(f.cols());
  part.labels.resize(static_cast<std::size_t>(f.rows()), 0);
  if (zero_rows) zero_rows->clear();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < f.cols(); ++l)
      if (f(i, l) > f(i, best)) best = l;
    part.labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    if (zero_rows && f.cols() > 0 && f.row(i).isZero(0.0))
      zero_rows->push_back(static_cast<std::size_t>(i));
  }
  return part;
}

// ---------------------------------------------------------------------------
// Solver

struct ConvergenceTrace {
  // Entry 0 is the objective at initialization; entry t follows outer iteration t.
  std::vector<double> outer_objectives;
  // Per block, the block objective after every inner iteration (all outer
  // iterations concatenated).
  std::vector<std::vector<double>> inner_objectives;
  // Seconds since the start of the solve, parallel to outer_objectives.
  std::vector<double> wall_times;
  bool converged = false;
};

struct HmcdResult {
  Problem problem;
  FactorizationState state;
  ConvergenceTrace trace;
  std::vector<std::size_t> uncovered_global_users;
  std::size_t guarded_sweeps = 0;  // sweeps redone by the monotone guard
  std::size_t rejected_steps = 0;  // steps the guard could not shrink enough
};

namespace detail {

inline double relative_change(double prev, double cur) {
  return std::abs(cur - prev) / std::max(prev, 1e-30);
}

// Applies factor .* ratio^power, halving the power until the block objective
// does not increase. Falls back to the unchanged factor.
template <class Eval>
bool guarded_step(Matrix& factor, const Matrix& ratio, double power, double& current,
                  Eval&& eval) {
  const Matrix saved = factor;
  for (int attempt = 0; attempt < 8; ++attempt) {
    factor = apply_ratio(saved, ratio, power);
    const double value = eval();
    if (value <= current) {
      current = value;
      return true;
    }
    power *= 0.5;
  }
  factor = saved;
  return false;
}

}  // namespace detail

// One inner sweep on a block, in the fixed order: normalize (X, D), update X,
// update D, normalize (X_o, D_o), update X_o, update D_o. With `guarded`, each
// step is backtracked so the block objective never rises.
inline void inner_sweep(const BlockProblem& b, FactorBlock& f, const Matrix& c,
                        double guard_eps, bool guarded, std::size_t* rejected = nullptr) {
  const double eps = guard_eps;
  const bool has_overlap = f.x_o.rows() > 0;
  if (!guarded) {
    normalize_full(f, eps);
    f.x = update_X(b, f, c, eps);
    f.d = update_D(b, f, c, eps);
    if (has_overlap) {
      normalize_overlap(f, eps);
      f.x_o = update_X_o(b, f, eps);
      f.d_o = update_D_o(b, f, eps);
    }
    return;
  }
  auto eval = [&] { return block_objective(b, f, c, eps); };
  auto step = [&](Matrix& factor, const Matrix& ratio, double power, double& current) {
    if (!detail::guarded_step(factor, ratio, power, current, eval) && rejected) ++*rejected;
  };
  normalize_full(f, eps);
  double current = eval();
  step(f.x, update_X_ratio(b, f, c, eps), kFactorPower, current);
  step(f.d, update_D_ratio(b, f, c, eps), kRelationPower, current);
  if (has_overlap) {
    normalize_overlap(f, eps);
    current = eval();
    step(f.x_o, update_X_o_ratio(b, f, eps), kFactorPower, current);
    step(f.d_o, update_D_o_ratio(b, f, eps), kRelationPower, current);
  }
}

inline HmcdResult run_hmcd(const MultiNetworkDataset& ds, const Hyperparameters& hyper) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  HmcdResult r;
  r.problem = prepare_problem(ds, hyper);
  const auto& p = r.problem;
  auto& st = r.state;
  auto& trace = r.trace;
  const double eps = hyper.guard_eps;

  st = starting_state(p, hyper);
  trace.inner_objectives.resize(p.blocks.size());
  double prev_outer = objective(p, st, eps);
  if (!std::isfinite(prev_outer)) throw SolverError(0, "non-finite initial objective");
  trace.outer_objectives.push_back(prev_outer);
  trace.wall_times.push_back(elapsed());

  for (std::size_t outer = 1; outer <= hyper.outer_max_iters; ++outer) {
    for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
      const auto& b = p.blocks[bi];
      if (b.empty) continue;
      auto& f = st.blocks[bi];
      double prev = block_objective(b, f, st.c, eps);
      for (std::size_t inner = 1; inner <= hyper.inner_max_iters; ++inner) {
        double cur = 0.0;
        try {
          const FactorBlock saved = hyper.monotone_guard ? f : FactorBlock{};
          inner_sweep(b, f, st.c, eps, false);
          cur = block_objective(b, f, st.c, eps);
          if (hyper.monotone_guard && !(cur <= prev)) {
            f = saved;
            inner_sweep(b, f, st.c, eps, true, &r.rejected_steps);
            cur = block_objective(b, f, st.c, eps);
            ++r.guarded_sweeps;
          }
        } catch (const SolverError& e) {
          throw SolverError(outer, e.detail());
        }
        if (!std::isfinite(cur))
          throw SolverError(outer, "non-finite block objective at inner iteration " +
                                       std::to_string(inner));
        trace.inner_objectives[bi].push_back(cur);
        const bool done = detail::relative_change(prev, cur) < hyper.rel_tol;
        prev = cur;
        if (done) break;
      }
    }
    st.c = update_C(p, st, eps, &r.uncovered_global_users);
    const double cur = objective(p, st, eps);
    if (!std::isfinite(cur)) throw SolverError(outer, "non-finite objective");
    trace.outer_objectives.push_back(cur);
    trace.wall_times.push_back(elapsed());
    const bool done = detail::relative_change(prev_outer, cur) < hyper.rel_tol;
    prev_outer = cur;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  // Report factors in normalized form (X Q, Q^-1 D Q^-1); the objective is
  // invariant under this. Frozen blocks have D = 0 and are left as they started.
  for (std::size_t bi = 0; bi < st.blocks.size(); ++bi) {
    if (p.blocks[bi].empty) continue;
    auto& f = st.blocks[bi];
    normalize_full(f, eps);
    if (f.x_o.rows() > 0) normalize_overlap(f, eps);
  }
  return r;
}

}  // namespace hmcd
