#include "elem0/inference.hpp"

#include "elem0/parallel.hpp"
#include "elem0/treesolve.hpp"

#include <chrono>
#include <map>
#include <mutex>

namespace elem0 {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t pair_offset(std::size_t i, std::size_t p) { return i * (2 * p - i - 1) / 2; }

struct ChunkOut {
  std::vector<std::vector<SparseSymmetric::Entry>> edges;  // [k]
};

void check_shapes(const BackwardMapSet& maps, const TreeHypergraph& tree) {
  if (maps.population_count() != tree.node_count()) {
    throw Error(ErrorKind::ShapeMismatch, "map count differs from tree size");
  }
  for (const auto& m : maps.maps) {
    if (m.rows() != maps.dimension() || m.cols() != maps.dimension()) {
      throw Error(ErrorKind::ShapeMismatch, "backward maps must be square and of equal size");
    }
  }
}

}  // namespace

bool is_positive_definite(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

PrecisionSet elem0_solve(const BackwardMapSet& maps, const TreeHypergraph& tree, const SolverConfig& cfg,
                         std::vector<std::string> genes) {
  cfg.validate();
  check_shapes(maps, tree);
  const auto t0 = Clock::now();
  const int K = maps.population_count();
  const int p = maps.dimension();
  if (genes.empty()) {
    for (int i = 0; i < p; ++i) genes.push_back("g" + std::to_string(i + 1));
  }
  if (static_cast<int>(genes.size()) != p) throw Error(ErrorKind::ShapeMismatch, "gene count differs from map size");

  PrecisionSet out;
  out.genes = std::move(genes);
  out.networks.resize(K);
  for (auto& net : out.networks) net.diagonal.resize(p);

  // Diagonals: fused quadratic, no sparsity term.
  Vector diag_objective(p);
  parallel_for(static_cast<std::size_t>(p), cfg.threads, [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    Vector f(K);
    for (int k = 0; k < K; ++k) f[k] = maps.maps[k](i, i);
    const Vector theta = solve_diagonal(f, cfg.gamma, tree);
    for (int k = 0; k < K; ++k) out.networks[k].diagonal[i] = theta[k];
    ScalarTreeProblem check{f, 0.0, cfg.gamma, tree, 0.0, {}};
    diag_objective[i] = check.evaluate(theta);
  });

  // Off-diagonals: one l0 tree problem per unordered pair.
  const auto base = ScalarTreeProblem{Vector::Zero(K), cfg.lambda, cfg.gamma, tree, 0.0, {}}.rooted();
  const auto relabel = root_tree(tree, 0).relabel;
  const std::size_t pairs = static_cast<std::size_t>(p) * (p - 1) / 2;
  std::vector<double> pair_objective(pairs);
  std::map<std::size_t, ChunkOut> chunks;
  std::mutex chunks_mutex;

  parallel_chunks(pairs, cfg.threads, [&](std::size_t begin, std::size_t end) {
    if (begin >= end) return;
    ChunkOut local;
    local.edges.resize(K);
    TreeL0Solver solver(base.parent, cfg.envelope_tolerance);
    RootedQuadraticProblem prob = base;
    std::size_t i = 0;
    while (pair_offset(i + 1, p) <= begin) ++i;
    std::size_t j = i + 1 + (begin - pair_offset(i, p));
    for (std::size_t idx = begin; idx < end; ++idx) {
      prob.constant = 0.0;
      for (int k = 0; k < K; ++k) {
        const double f = maps.maps[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        prob.lin[relabel[k]] = -2.0 * f;
        prob.constant += f * f;
      }
      const auto sol = solver.solve(prob);
      pair_objective[idx] = sol.objective;
      for (int k = 0; k < K; ++k) {
        const double x = sol.x[relabel[k]];
        if (x != 0.0) local.edges[k].push_back({static_cast<int>(i), static_cast<int>(j), x});
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
      auto& dst = out.networks[k].edges;
      dst.insert(dst.end(), chunk.edges[k].begin(), chunk.edges[k].end());
    }
  }

  double objective = diag_objective.sum();
  double off = 0.0;
  for (double g : pair_objective) off += g;
  objective += 2.0 * off;

  auto& meta = out.metadata;
  meta.config = cfg;
  meta.jitter = maps.jitter;
  meta.objective = objective;
  meta.timings.solve_s = seconds_since(t0);
  meta.positive_definite.resize(K);
  for (int k = 0; k < K; ++k) meta.positive_definite[k] = is_positive_definite(out.networks[k].to_dense());
  return out;
}

PrecisionSet elem0_infer(const std::vector<ExpressionMatrix>& data, const TreeHypergraph& tree,
                         const SolverConfig& cfg) {
  const auto t0 = Clock::now();
  const auto ctx = validate_run_inputs(data, tree, cfg);
  auto t = Clock::now();
  const auto covs = sample_covariances(ctx.data, cfg.center_data, cfg.threads);
  const double cov_s = seconds_since(t);
  t = Clock::now();
  const auto maps = backward_maps(covs, cfg);
  const double map_s = seconds_since(t);
  auto out = elem0_solve(maps, ctx.tree, cfg, ctx.genes);
  out.metadata.timings.covariance_s = cov_s;
  out.metadata.timings.backward_map_s = map_s;
  out.metadata.timings.total_s = seconds_since(t0);
  return out;
}

double elem0_objective(const PrecisionSet& precision, const BackwardMapSet& maps, const SolverConfig& cfg,
                       const TreeHypergraph& tree) {
  check_shapes(maps, tree);
  if (precision.population_count() != maps.population_count()) {
    throw Error(ErrorKind::ShapeMismatch, "precision set and maps disagree on population count");
  }
  std::vector<Matrix> dense;
  for (const auto& net : precision.networks) {
    if (net.dimension() != maps.dimension()) throw Error(ErrorKind::ShapeMismatch, "network size differs from map size");
    dense.push_back(net.to_dense());
  }
  double total = 0.0;
  for (std::size_t k = 0; k < dense.size(); ++k) {
    total += (dense[k] - maps.maps[k]).squaredNorm();
    total += cfg.lambda * 2.0 * static_cast<double>(precision.networks[k].edge_count());
  }
  for (const auto& e : tree.edges()) total += cfg.gamma * e.weight * (dense[e.u] - dense[e.v]).squaredNorm();
  return total;
}

Matrix coordinate_objectives(const PrecisionSet& precision, const BackwardMapSet& maps, const SolverConfig& cfg,
                             const TreeHypergraph& tree) {
  check_shapes(maps, tree);
  const int K = maps.population_count();
  const int p = maps.dimension();
  std::vector<Matrix> dense;
  for (const auto& net : precision.networks) dense.push_back(net.to_dense());
  Matrix out = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      ScalarTreeProblem prob{Vector(K), i == j ? 0.0 : cfg.lambda, cfg.gamma, tree, 0.0, {}};
      Vector x(K);
      for (int k = 0; k < K; ++k) {
        prob.targets[k] = maps.maps[k](i, j);
        x[k] = dense[k](i, j);
      }
      out(i, j) = prob.evaluate(x);
    }
  }
  return out;
}

}  // namespace elem0
