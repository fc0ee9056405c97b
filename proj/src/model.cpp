#include "elem0/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace elem0 {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MismatchedGeneSets: return "MismatchedGeneSets";
    case ErrorKind::NotATree: return "NotATree";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::SingularAfterJitter: return "SingularAfterJitter";
    case ErrorKind::TooLargeForOracle: return "TooLargeForOracle";
    case ErrorKind::AllConfigurationsInfeasible: return "AllConfigurationsInfeasible";
    case ErrorKind::InsufficientZeroPositions: return "InsufficientZeroPositions";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::MismatchedGeneSets:
    case ErrorKind::NotATree:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::Io:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

void ExpressionMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1) {
    throw Error(ErrorKind::InvalidArgument, "expression matrix must have at least one gene and one sample");
  }
  if (static_cast<Eigen::Index>(genes.size()) != values.rows()) {
    throw Error(ErrorKind::InvalidArgument, "gene list length does not match matrix rows");
  }
  if (!samples.empty() && static_cast<Eigen::Index>(samples.size()) != values.cols()) {
    throw Error(ErrorKind::InvalidArgument, "sample list length does not match matrix columns");
  }
  if (!values.allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "expression matrix contains NaN or infinite values");
  }
}

// ---------------------------------------------------------------------------
// TreeHypergraph

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

std::string TreeHypergraph::diagnose(int node_count, const std::vector<TreeEdge>& edges) {
  if (node_count < 1) return "node count must be at least 1";
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= node_count || e.v >= node_count) {
      std::ostringstream os;
      os << "edge (" << e.u + 1 << ", " << e.v + 1 << ") references a node outside [1, " << node_count << "]";
      return os.str();
    }
    if (e.u == e.v) return "self loop at node " + std::to_string(e.u + 1);
    if (!std::isfinite(e.weight) || e.weight <= 0.0) {
      std::ostringstream os;
      os << "edge (" << e.u + 1 << ", " << e.v + 1 << ") has non-positive weight " << e.weight;
      return os.str();
    }
  }
  UnionFind uf(node_count);
  for (const auto& e : edges) {
    if (!uf.unite(e.u, e.v)) {
      std::ostringstream os;
      os << "edge (" << std::min(e.u, e.v) + 1 << ", " << std::max(e.u, e.v) + 1 << ") closes a cycle";
      return os.str();
    }
  }
  if (static_cast<int>(edges.size()) != node_count - 1) {
    std::ostringstream os;
    os << "hypergraph is disconnected: " << edges.size() << " edges for " << node_count << " nodes";
    return os.str();
  }
  return {};
}

TreeHypergraph TreeHypergraph::create(int node_count, std::vector<TreeEdge> edges) {
  if (node_count < 1) throw Error(ErrorKind::InvalidArgument, "node count must be at least 1");
  if (auto problem = diagnose(node_count, edges); !problem.empty()) {
    bool structural = problem.find("cycle") != std::string::npos ||
                      problem.find("disconnected") != std::string::npos ||
                      problem.find("self loop") != std::string::npos;
    throw Error(structural ? ErrorKind::NotATree : ErrorKind::InvalidArgument, problem);
  }
  TreeHypergraph tree;
  tree.node_count_ = node_count;
  for (auto& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(),
            [](const TreeEdge& a, const TreeEdge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  tree.edges_ = std::move(edges);
  tree.adjacency_.assign(node_count, {});
  for (const auto& e : tree.edges_) {
    tree.adjacency_[e.u].push_back({e.v, e.weight});
    tree.adjacency_[e.v].push_back({e.u, e.weight});
  }
  return tree;
}

Matrix TreeHypergraph::laplacian() const {
  Matrix lap = Matrix::Zero(node_count_, node_count_);
  for (const auto& e : edges_) {
    lap(e.u, e.u) += e.weight;
    lap(e.v, e.v) += e.weight;
    lap(e.u, e.v) -= e.weight;
    lap(e.v, e.u) -= e.weight;
  }
  return lap;
}

// ---------------------------------------------------------------------------
// SolverConfig

double SolverConfig::nu_for(int population) const {
  if (nu_per_population.empty()) return nu;
  return nu_per_population.at(population);
}

void SolverConfig::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be finite and non-negative");
    }
  };
  check(lambda, "lambda");
  check(gamma, "gamma");
  check(nu, "nu");
  for (double v : nu_per_population) check(v, "nu_per_population entry");
  check(alpha, "alpha");
  check(pd_jitter_start, "pd_jitter_start");
  check(pd_jitter_cap, "pd_jitter_cap");
  check(envelope_tolerance, "envelope_tolerance");
  if (pd_jitter_start > pd_jitter_cap) {
    throw Error(ErrorKind::InvalidArgument, "pd_jitter_start must not exceed pd_jitter_cap");
  }
  if (threads < 1) throw Error(ErrorKind::InvalidArgument, "threads must be at least 1");
}

// ---------------------------------------------------------------------------
// Sparse symmetric storage

SparseSymmetric SparseSymmetric::from_dense(const Matrix& m) {
  SparseSymmetric out;
  out.diagonal = m.diagonal();
  const int p = static_cast<int>(m.rows());
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (m(i, j) != 0.0) out.edges.push_back({i, j, m(i, j)});
    }
  }
  return out;
}

Matrix SparseSymmetric::to_dense() const {
  const auto p = diagonal.size();
  Matrix m = Matrix::Zero(p, p);
  m.diagonal() = diagonal;
  for (const auto& e : edges) {
    m(e.i, e.j) = e.value;
    m(e.j, e.i) = e.value;
  }
  return m;
}

SparseSymmetric add(const SparseSymmetric& a, const SparseSymmetric& b) {
  if (a.diagonal.size() != b.diagonal.size()) {
    throw Error(ErrorKind::ShapeMismatch, "cannot add networks of different dimension");
  }
  SparseSymmetric out;
  out.diagonal = a.diagonal + b.diagonal;
  auto ia = a.edges.begin();
  auto ib = b.edges.begin();
  auto key = [](const SparseSymmetric::Entry& e) { return std::pair(e.i, e.j); };
  while (ia != a.edges.end() || ib != b.edges.end()) {
    if (ib == b.edges.end() || (ia != a.edges.end() && key(*ia) < key(*ib))) {
      out.edges.push_back(*ia++);
    } else if (ia == a.edges.end() || key(*ib) < key(*ia)) {
      out.edges.push_back(*ib++);
    } else {
      double v = ia->value + ib->value;
      if (v != 0.0) out.edges.push_back({ia->i, ia->j, v});
      ++ia;
      ++ib;
    }
  }
  return out;
}

std::size_t PrecisionSet::total_edges() const {
  std::size_t n = 0;
  for (const auto& net : networks) n += net.edge_count();
  return n;
}

SparseSymmetric CategoricalPrecisionSet::total(int k, int c) const {
  return add(global.at(k), local.at(k).at(c));
}

// ---------------------------------------------------------------------------

RunContext validate_run_inputs(std::vector<ExpressionMatrix> data, const TreeHypergraph& tree,
                               const SolverConfig& cfg) {
  std::vector<std::pair<ErrorKind, std::string>> problems;
  if (data.empty()) problems.emplace_back(ErrorKind::InvalidArgument, "no populations supplied");
  if (static_cast<int>(data.size()) != tree.node_count()) {
    problems.emplace_back(ErrorKind::InvalidArgument,
                          std::to_string(data.size()) + " populations but hypergraph has " +
                              std::to_string(tree.node_count()) + " nodes");
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    try {
      data[k].validate();
    } catch (const Error& e) {
      problems.emplace_back(e.kind(), "population " + std::to_string(k + 1) + ": " + e.detail());
    }
  }
  try {
    cfg.validate();
    if (!cfg.nu_per_population.empty() && cfg.nu_per_population.size() != data.size()) {
      problems.emplace_back(ErrorKind::InvalidArgument, "nu_per_population length does not match population count");
    }
  } catch (const Error& e) {
    problems.emplace_back(e.kind(), e.detail());
  }

  RunContext ctx;
  if (problems.empty()) {
    ctx.genes = data.front().genes;
    std::unordered_map<std::string, int> index;
    for (std::size_t g = 0; g < ctx.genes.size(); ++g) {
      if (!index.emplace(ctx.genes[g], static_cast<int>(g)).second) {
        problems.emplace_back(ErrorKind::MismatchedGeneSets, "duplicate gene id '" + ctx.genes[g] + "' in population 1");
      }
    }
    for (std::size_t k = 1; k < data.size() && problems.empty(); ++k) {
      auto& x = data[k];
      if (x.genes.size() != ctx.genes.size()) {
        problems.emplace_back(ErrorKind::MismatchedGeneSets,
                              "population " + std::to_string(k + 1) + " has " + std::to_string(x.genes.size()) +
                                  " genes, population 1 has " + std::to_string(ctx.genes.size()));
        continue;
      }
      std::vector<int> order(ctx.genes.size(), -1);
      bool ok = true;
      for (std::size_t g = 0; g < x.genes.size(); ++g) {
        auto it = index.find(x.genes[g]);
        if (it == index.end() || order[it->second] != -1) {
          problems.emplace_back(ErrorKind::MismatchedGeneSets,
                                "population " + std::to_string(k + 1) + " gene '" + x.genes[g] +
                                    "' is missing from population 1 or duplicated");
          ok = false;
          break;
        }
        order[it->second] = static_cast<int>(g);
      }
      if (!ok) continue;
      Matrix reordered(x.values.rows(), x.values.cols());
      for (std::size_t g = 0; g < order.size(); ++g) reordered.row(g) = x.values.row(order[g]);
      x.values = std::move(reordered);
      x.genes = ctx.genes;
    }
  }

  if (!problems.empty()) {
    std::string msg;
    for (const auto& [kind, text] : problems) {
      if (!msg.empty()) msg += "; ";
      msg += text;
    }
    throw Error(problems.front().first, msg);
  }
  ctx.data = std::move(data);
  ctx.tree = tree;
  ctx.config = cfg;
  return ctx;
}

}  // namespace elem0
