#include "elem0/categorical.hpp"

#include "elem0/inference.hpp"
#include "elem0/parallel.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace elem0 {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t pair_offset(std::size_t i, std::size_t p) { return i * (2 * p - i - 1) / 2; }

void check_maps(const BackwardMapSet& maps, int categories, const TreeHypergraph& tree) {
  if (categories < 1) throw Error(ErrorKind::InvalidArgument, "at least one category is required");
  if (maps.population_count() != tree.node_count() * categories) {
    throw Error(ErrorKind::ShapeMismatch, "expected one map per population and category");
  }
  for (const auto& m : maps.maps) {
    if (m.rows() != maps.dimension() || m.cols() != maps.dimension()) {
      throw Error(ErrorKind::ShapeMismatch, "backward maps must be square and of equal size");
    }
  }
}

struct CellEntries {
  std::vector<std::vector<SparseSymmetric::Entry>> global;  // [k]
  std::vector<std::vector<SparseSymmetric::Entry>> local;   // [k*C + c]
};

}  // namespace

void CategoricalCoordinate::validate() const {
  if (targets.rows() != tree.node_count()) throw Error(ErrorKind::ShapeMismatch, "target rows differ from tree size");
  if (targets.cols() < 1) throw Error(ErrorKind::ShapeMismatch, "at least one category is required");
  if (!targets.allFinite()) throw Error(ErrorKind::NonFiniteInput, "non-finite target");
  for (double v : {lambda, gamma, alpha}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::InvalidArgument, "lambda, gamma and alpha must be finite and non-negative");
    }
  }
}

double CategoricalCoordinate::evaluate(const Vector& global, const Matrix& local) const {
  const int K = populations();
  const int C = categories();
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    total += alpha * global[k] * global[k];
    if (sparse && global[k] != 0.0) total += lambda;
    for (int c = 0; c < C; ++c) {
      const double d = global[k] + local(k, c) - targets(k, c);
      total += d * d + alpha * local(k, c) * local(k, c);
      if (sparse && local(k, c) != 0.0) total += lambda;
    }
  }
  for (const auto& e : tree.edges()) {
    const double d = global[e.u] - global[e.v];
    total += gamma * e.weight * d * d;
  }
  return total;
}

RootedQuadraticProblem CategoricalCoordinate::rooted() const {
  validate();
  const int K = populations();
  const int C = categories();
  const auto rt = root_tree(tree, 0);
  std::vector<int> parent(rt.parent);
  parent.resize(K + K * C);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) parent[K + k * C + c] = rt.relabel[k];
  }
  RootedQuadraticProblem out(parent);
  const double penalty = sparse ? lambda : 0.0;
  for (int k = 0; k < K; ++k) {
    const int v = rt.relabel[k];
    out.quad[v] = alpha;
    out.penalty[v] = penalty;
    out.fusion[v] = gamma * rt.parent_weight[v];
    for (int c = 0; c < C; ++c) {
      const int l = K + k * C + c;
      out.quad[l] = alpha;
      out.penalty[l] = penalty;
      out.fusion[l] = 1.0;
      out.scale[l] = -1.0;
      out.offset[l] = targets(k, c);
    }
  }
  return out;
}

CategoricalSolution solve_categorical_coordinate(const CategoricalCoordinate& problem) {
  const auto rooted = problem.rooted();
  TreeL0Solver solver(rooted.parent);
  const auto sol = solver.solve(rooted);
  const int K = problem.populations();
  const int C = problem.categories();
  const auto relabel = root_tree(problem.tree, 0).relabel;
  CategoricalSolution out{Vector(K), Matrix(K, C), sol.objective};
  for (int k = 0; k < K; ++k) {
    out.global[k] = sol.x[relabel[k]];
    for (int c = 0; c < C; ++c) out.local(k, c) = sol.x[K + k * C + c];
  }
  return out;
}

CategoricalSolution brute_force_categorical(const CategoricalCoordinate& problem) {
  problem.validate();
  const int K = problem.populations();
  const int C = problem.categories();
  const int n = K + K * C;
  if (n > kMaxOracleSize) throw Error(ErrorKind::TooLargeForOracle, "too many variables to enumerate");

  // z' Q z + b' z + const, z = (g_1..g_K, l_11..l_KC)
  Matrix Q = problem.alpha * Matrix::Identity(n, n);
  Vector b = Vector::Zero(n);
  double constant = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) {
      const int l = K + k * C + c;
      Q(k, k) += 1.0;
      Q(l, l) += 1.0;
      Q(k, l) += 1.0;
      Q(l, k) += 1.0;
      b[k] -= 2.0 * problem.targets(k, c);
      b[l] -= 2.0 * problem.targets(k, c);
      constant += problem.targets(k, c) * problem.targets(k, c);
    }
  }
  for (const auto& e : problem.tree.edges()) {
    const double w = problem.gamma * e.weight;
    Q(e.u, e.u) += w;
    Q(e.v, e.v) += w;
    Q(e.u, e.v) -= w;
    Q(e.v, e.u) -= w;
  }

  CategoricalSolution best{Vector::Zero(K), Matrix::Zero(K, C), constant};
  int best_count = 0;
  std::vector<int> idx;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    idx.clear();
    for (int v = 0; v < n; ++v) {
      if (mask & (1u << v)) idx.push_back(v);
    }
    const auto m = static_cast<Eigen::Index>(idx.size());
    Matrix Qs(m, m);
    Vector bs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      bs[a] = b[idx[a]];
      for (Eigen::Index c = 0; c < m; ++c) Qs(a, c) = Q(idx[a], idx[c]);
    }
    const Vector zs = Qs.completeOrthogonalDecomposition().solve(-0.5 * bs);
    Vector g = Vector::Zero(K);
    Matrix l = Matrix::Zero(K, C);
    for (Eigen::Index a = 0; a < m; ++a) {
      const int v = idx[a];
      if (v < K) {
        g[v] = zs[a];
      } else {
        l((v - K) / C, (v - K) % C) = zs[a];
      }
    }
    const double value = problem.evaluate(g, l);
    const int count = static_cast<int>(m);
    if (value < best.objective || (value == best.objective && count < best_count)) {
      best = {g, l, value};
      best_count = count;
    }
  }
  return best;
}

CategoricalPrecisionSet categorical_solve(const BackwardMapSet& maps, int categories, const TreeHypergraph& tree,
                                          const SolverConfig& cfg, std::vector<std::string> genes) {
  cfg.validate();
  check_maps(maps, categories, tree);
  const auto t0 = Clock::now();
  const int K = tree.node_count();
  const int C = categories;
  const int p = maps.dimension();
  if (genes.empty()) {
    for (int i = 0; i < p; ++i) genes.push_back("g" + std::to_string(i + 1));
  }
  if (static_cast<int>(genes.size()) != p) throw Error(ErrorKind::ShapeMismatch, "gene count differs from map size");

  CategoricalPrecisionSet out;
  out.genes = std::move(genes);
  out.categories = C;
  out.global.resize(K);
  out.local.assign(K, std::vector<SparseSymmetric>(C));
  for (int k = 0; k < K; ++k) {
    out.global[k].diagonal.resize(p);
    for (int c = 0; c < C; ++c) out.local[k][c].diagonal.resize(p);
  }

  CategoricalCoordinate shape{Matrix::Zero(K, C), cfg.lambda, cfg.gamma, cfg.alpha, tree, true};
  const auto base = shape.rooted();
  const auto relabel = root_tree(tree, 0).relabel;
  auto load = [&](RootedQuadraticProblem& prob, Eigen::Index i, Eigen::Index j) {
    for (int k = 0; k < K; ++k) {
      for (int c = 0; c < C; ++c) prob.offset[K + k * C + c] = maps.maps[k * C + c](i, j);
    }
  };

  Vector diag_objective(p);
  parallel_chunks(static_cast<std::size_t>(p), cfg.threads, [&](std::size_t begin, std::size_t end) {
    RootedQuadraticProblem prob = base;
    std::fill(prob.penalty.begin(), prob.penalty.end(), 0.0);
    for (std::size_t ii = begin; ii < end; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      load(prob, i, i);
      const Vector x = solve_tree_quadratic(prob);
      diag_objective[i] = prob.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      for (int k = 0; k < K; ++k) {
        out.global[k].diagonal[i] = x[relabel[k]];
        for (int c = 0; c < C; ++c) out.local[k][c].diagonal[i] = x[K + k * C + c];
      }
    }
  });

  const std::size_t pairs = static_cast<std::size_t>(p) * (p - 1) / 2;
  std::vector<double> pair_objective(pairs);
  std::map<std::size_t, CellEntries> chunks;
  std::mutex chunks_mutex;
  parallel_chunks(pairs, cfg.threads, [&](std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    CellEntries local;
    local.global.resize(K);
    local.local.resize(K * C);
    TreeL0Solver solver(base.parent, cfg.envelope_tolerance);
    RootedQuadraticProblem prob = base;
    std::size_t i = 0;
    while (pair_offset(i + 1, p) <= begin) ++i;
    std::size_t j = i + 1 + (begin - pair_offset(i, p));
    for (std::size_t idx = begin; idx < end; ++idx) {
      load(prob, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const auto sol = solver.solve(prob);
      pair_objective[idx] = sol.objective;
      const int ii = static_cast<int>(i);
      const int jj = static_cast<int>(j);
      for (int k = 0; k < K; ++k) {
        const double g = sol.x[relabel[k]];
        if (g != 0.0) local.global[k].push_back({ii, jj, g});
        for (int c = 0; c < C; ++c) {
          const double l = sol.x[K + k * C + c];
          if (l != 0.0) local.local[k * C + c].push_back({ii, jj, l});
        }
      }
      if (++j == static_cast<std::size_t>(p)) {
        ++i;
        j = i + 1;
      }
    }
    std::lock_guard lock(chunks_mutex);
    chunks.emplace(begin, std::move(local));
  });

  for (auto& [begin, chunk] : chunks) {
    for (int k = 0; k < K; ++k) {
      auto& g = out.global[k].edges;
      g.insert(g.end(), chunk.global[k].begin(), chunk.global[k].end());
      for (int c = 0; c < C; ++c) {
        auto& l = out.local[k][c].edges;
        l.insert(l.end(), chunk.local[k * C + c].begin(), chunk.local[k * C + c].end());
      }
    }
  }

  double off = 0.0;
  for (double g : pair_objective) off += g;
  auto& meta = out.metadata;
  meta.config = cfg;
  meta.jitter = maps.jitter;
  meta.objective = diag_objective.sum() + 2.0 * off;
  meta.timings.solve_s = seconds_since(t0);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) meta.positive_definite.push_back(is_positive_definite(out.total(k, c).to_dense()));
  }
  return out;
}

CategoricalContext validate_categorical_inputs(const std::vector<std::vector<ExpressionMatrix>>& data,
                                               const TreeHypergraph& tree, const SolverConfig& cfg) {
  cfg.validate();
  if (!(cfg.alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "categorical inference requires alpha > 0");
  const int K = tree.node_count();
  if (static_cast<int>(data.size()) != K) {
    throw Error(ErrorKind::InvalidArgument, "expected " + std::to_string(K) + " populations, got " +
                                                std::to_string(data.size()));
  }
  const int C = static_cast<int>(data.front().size());
  if (C < 2) throw Error(ErrorKind::InvalidArgument, "categorical inference needs at least two categories");
  for (const auto& cells : data) {
    if (static_cast<int>(cells.size()) != C) {
      throw Error(ErrorKind::ShapeMismatch, "every population needs the same number of categories");
    }
  }
  if (!cfg.nu_per_population.empty() && static_cast<int>(cfg.nu_per_population.size()) != K) {
    throw Error(ErrorKind::InvalidArgument, "nu_per_population length does not match population count");
  }

  SolverConfig per_category = cfg;
  per_category.nu_per_population.clear();
  CategoricalContext out;
  out.categories = C;
  out.cells.resize(static_cast<std::size_t>(K * C));
  for (int c = 0; c < C; ++c) {
    std::vector<ExpressionMatrix> column;
    for (int k = 0; k < K; ++k) column.push_back(data[k][c]);
    RunContext ctx;
    try {
      ctx = validate_run_inputs(std::move(column), tree, per_category);
    } catch (const Error& e) {
      throw Error(e.kind(), "category " + std::to_string(c + 1) + ": " + e.detail());
    }
    if (c == 0) out.genes = ctx.genes;
    if (ctx.genes.size() != out.genes.size()) {
      throw Error(ErrorKind::MismatchedGeneSets, "category " + std::to_string(c + 1) + " has a different gene count");
    }
    std::unordered_map<std::string, int> row;
    for (std::size_t g = 0; g < ctx.genes.size(); ++g) row[ctx.genes[g]] = static_cast<int>(g);
    std::vector<int> order;
    for (const auto& g : out.genes) {
      auto it = row.find(g);
      if (it == row.end()) {
        throw Error(ErrorKind::MismatchedGeneSets, "gene '" + g + "' missing in category " + std::to_string(c + 1));
      }
      order.push_back(it->second);
    }
    for (int k = 0; k < K; ++k) {
      auto& x = ctx.data[k];
      ExpressionMatrix y{out.genes, x.samples, Matrix(x.values.rows(), x.values.cols())};
      for (std::size_t g = 0; g < order.size(); ++g) y.values.row(static_cast<Eigen::Index>(g)) = x.values.row(order[g]);
      out.cells[k * C + c] = std::move(y);
    }
  }
  return out;
}

SolverConfig expand_nu_per_cell(const SolverConfig& cfg, int populations, int categories) {
  SolverConfig out = cfg;
  out.nu_per_population.clear();
  for (int k = 0; k < populations; ++k) {
    for (int c = 0; c < categories; ++c) out.nu_per_population.push_back(cfg.nu_for(k));
  }
  return out;
}

CategoricalPrecisionSet categorical_infer(const CategoricalProblem& problem) {
  const auto t0 = Clock::now();
  const auto& cfg = problem.cfg;
  const auto ctx = validate_categorical_inputs(problem.data, problem.tree, cfg);
  const int K = problem.tree.node_count();
  const int C = ctx.categories;

  auto t = Clock::now();
  const auto covs = sample_covariances(ctx.cells, cfg.center_data, cfg.threads);
  const double cov_s = seconds_since(t);
  t = Clock::now();
  const auto maps = backward_maps(covs, expand_nu_per_cell(cfg, K, C));
  const double map_s = seconds_since(t);
  auto out = categorical_solve(maps, C, problem.tree, cfg, ctx.genes);
  out.metadata.timings.covariance_s = cov_s;
  out.metadata.timings.backward_map_s = map_s;
  out.metadata.timings.total_s = seconds_since(t0);
  return out;
}

double categorical_objective(const CategoricalPrecisionSet& result, const BackwardMapSet& maps,
                             const SolverConfig& cfg, const TreeHypergraph& tree) {
  const int C = result.categories;
  check_maps(maps, C, tree);
  const int K = tree.node_count();
  if (result.population_count() != K) throw Error(ErrorKind::ShapeMismatch, "result population count differs from tree");
  std::vector<Matrix> global;
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    global.push_back(result.global[k].to_dense());
    total += cfg.alpha * global[k].squaredNorm() + cfg.lambda * 2.0 * static_cast<double>(result.global[k].edge_count());
    for (int c = 0; c < C; ++c) {
      const Matrix local = result.local[k][c].to_dense();
      total += (global[k] + local - maps.maps[k * C + c]).squaredNorm();
      total += cfg.alpha * local.squaredNorm() + cfg.lambda * 2.0 * static_cast<double>(result.local[k][c].edge_count());
    }
  }
  for (const auto& e : tree.edges()) total += cfg.gamma * e.weight * (global[e.u] - global[e.v]).squaredNorm();
  return total;
}

}  // namespace elem0
