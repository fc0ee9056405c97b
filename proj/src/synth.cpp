#include "elem0/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace elem0 {

namespace {

// Independent generator per purpose so that, e.g., changing K does not move
// the sample stream of population 1.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32)};
  return std::mt19937_64(seq);
}

enum Purpose : std::uint64_t { kTree = 1, kCascade = 2, kLocal = 3, kSamples = 1000 };

int module_size(const SynthSpec& spec) { return spec.p / spec.modules; }

double perturbed(double value, std::uniform_real_distribution<double>& dist, std::mt19937_64& rng) {
  for (;;) {
    const double v = value + dist(rng);
    if (std::abs(v) >= kMinPerturbedMagnitude) return v;
  }
}

double nonzero_draw(std::uniform_real_distribution<double>& dist, std::mt19937_64& rng) {
  for (;;) {
    const double v = dist(rng);
    if (std::abs(v) >= kMinPerturbedMagnitude) return v;
  }
}

}  // namespace

int SynthSpec::samples() const { return std::max(1, static_cast<int>(std::lround(n_over_p * p))); }

void SynthSpec::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, "synth: " + m); };
  if (p < 1 || populations < 1 || modules < 1) bad("p, populations and modules must be positive");
  if (p % modules != 0) bad("p must be divisible by the module count");
  if (ba_edges < 1 || ba_edges >= module_size(*this)) bad("ba_edges must be in [1, module size)");
  if (perturb_modules < 0 || perturb_modules > modules) bad("perturb_modules must be in [0, modules]");
  if (!(n_over_p > 0.0) || !std::isfinite(n_over_p)) bad("n_over_p must be positive");
  if (!(weight_low > 0.0) || !(weight_high >= weight_low)) bad("need 0 < weight_low <= weight_high");
  if (!(perturb_high > perturb_low)) bad("perturbation range is empty");
  if (!(pd_margin > 0.0)) bad("pd_margin must be positive");
  if (categories < 0) bad("categories must be non-negative");
  if (!(local_edge_ratio >= 0.0 && local_edge_ratio < 1.0)) bad("local_edge_ratio must be in [0, 1)");
}

std::vector<std::string> default_gene_names(int p) {
  std::vector<std::string> out;
  for (int i = 0; i < p; ++i) out.push_back("g" + std::to_string(i + 1));
  return out;
}

TreeHypergraph mst_from_distances(const Matrix& distances) {
  const auto K = static_cast<int>(distances.rows());
  if (distances.cols() != K) throw Error(ErrorKind::ShapeMismatch, "distance matrix must be square");
  if (K < 1) throw Error(ErrorKind::InvalidArgument, "need at least one population");
  if (!distances.allFinite()) throw Error(ErrorKind::NonFiniteInput, "non-finite distance");
  struct Candidate {
    double d;
    int i;
    int j;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < K; ++i) {
    for (int j = i + 1; j < K; ++j) {
      if (distances(i, j) != distances(j, i)) throw Error(ErrorKind::InvalidArgument, "distance matrix is not symmetric");
      candidates.push_back({distances(i, j), i, j});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.d < b.d; });
  std::vector<int> root(K);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  std::vector<TreeEdge> edges;
  for (const auto& c : candidates) {
    const int a = find(c.i);
    const int b = find(c.j);
    if (a == b) continue;
    root[a] = b;
    edges.push_back({c.i, c.j, 1.0});
    if (static_cast<int>(edges.size()) == K - 1) break;
  }
  return TreeHypergraph::create(K, std::move(edges));
}

TreeHypergraph generate_hypergraph(int populations, std::uint64_t seed) {
  if (populations < 1) throw Error(ErrorKind::InvalidArgument, "need at least one population");
  auto rng = stream(seed, kTree);
  std::normal_distribution<double> normal;
  Matrix d = Matrix::Zero(populations, populations);
  for (int i = 0; i < populations; ++i) {
    for (int j = i + 1; j < populations; ++j) d(i, j) = d(j, i) = std::abs(normal(rng));
  }
  return mst_from_distances(d);
}

Matrix ba_module(int size, int edges_per_node, double low, double high, std::mt19937_64& rng) {
  Matrix a = Matrix::Zero(size, size);
  std::uniform_real_distribution<double> magnitude(low, high);
  std::bernoulli_distribution sign(0.5);
  auto connect = [&](int u, int v) {
    const double w = (sign(rng) ? 1.0 : -1.0) * magnitude(rng);
    a(u, v) = a(v, u) = w;
  };
  const int m = edges_per_node;
  std::vector<int> targets(m);
  std::iota(targets.begin(), targets.end(), 0);
  std::vector<int> repeated;
  for (int source = m; source < size; ++source) {
    for (int t : targets) connect(source, t);
    repeated.insert(repeated.end(), targets.begin(), targets.end());
    repeated.insert(repeated.end(), m, source);
    targets.clear();
    std::uniform_int_distribution<std::size_t> pick(0, repeated.size() - 1);
    while (static_cast<int>(targets.size()) < m) {
      const int t = repeated[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
  }
  return a;
}

void make_diagonally_dominant(Matrix& m, double margin) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m(i, i) = 0.0;
    m(i, i) = m.row(i).cwiseAbs().sum() + margin;
  }
}

std::vector<Matrix> generate_network_cascade(const SynthSpec& spec, const TreeHypergraph& tree) {
  spec.validate();
  const int K = tree.node_count();
  const int M = spec.modules;
  const int s = module_size(spec);
  auto rng = stream(spec.seed, kCascade);
  std::uniform_real_distribution<double> perturbation(spec.perturb_low, spec.perturb_high);

  auto fresh_module = [&]() { return ba_module(s, spec.ba_edges, spec.weight_low, spec.weight_high, rng); };

  std::vector<Matrix> off(K);
  off[0] = Matrix::Zero(spec.p, spec.p);
  for (int b = 0; b < M; ++b) off[0].block(b * s, b * s, s, s) = fresh_module();

  std::vector<bool> seen(K, false);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = true;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop();
    for (const auto& nb : tree.neighbors(u)) {
      const int v = nb.node;
      if (seen[v]) continue;
      seen[v] = true;
      queue.push(v);
      Matrix net = off[u];
      std::vector<int> order(M);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int q = 0; q < spec.perturb_modules; ++q) {
        const int b = order[q];
        for (int i = b * s; i < (b + 1) * s; ++i) {
          for (int j = i + 1; j < (b + 1) * s; ++j) {
            if (net(i, j) != 0.0) net(i, j) = net(j, i) = perturbed(net(i, j), perturbation, rng);
          }
        }
      }
      if (tree.degree(v) >= 3 && spec.perturb_modules < M) {
        std::uniform_int_distribution<int> pick(spec.perturb_modules, M - 1);
        const int b = order[pick(rng)];
        net.block(b * s, b * s, s, s) = fresh_module();
      }
      off[v] = std::move(net);
    }
  }
  for (auto& m : off) make_diagonally_dominant(m, spec.pd_margin);
  return off;
}

ExpressionMatrix sample_data(const Matrix& theta, int n, std::uint64_t seed, const std::vector<std::string>& genes) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "need at least one sample");
  const auto p = theta.rows();
  Eigen::LLT<Matrix> llt_theta(theta);
  if (theta.cols() != p || llt_theta.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "precision matrix is not positive definite");
  }
  const Matrix sigma = llt_theta.solve(Matrix::Identity(p, p));
  Eigen::LLT<Matrix> llt_sigma(0.5 * (sigma + sigma.transpose()));
  if (llt_sigma.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "covariance is not positive definite");
  }
  auto rng = stream(seed, kSamples);
  std::normal_distribution<double> normal;
  Matrix z(p, n);
  for (int c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < p; ++r) z(r, c) = normal(rng);
  }
  ExpressionMatrix x;
  x.genes = genes.empty() ? default_gene_names(static_cast<int>(p)) : genes;
  for (int c = 0; c < n; ++c) x.samples.push_back("s" + std::to_string(c + 1));
  x.values = llt_sigma.matrixL() * z;
  return x;
}

Matrix add_local_edges(const Matrix& global, const SynthSpec& spec, std::mt19937_64& rng) {
  const int s = module_size(spec);
  std::size_t shared = 0;
  std::vector<std::pair<int, int>> free_slots;
  for (int b = 0; b < spec.modules; ++b) {
    for (int i = b * s; i < (b + 1) * s; ++i) {
      for (int j = i + 1; j < (b + 1) * s; ++j) {
        if (global(i, j) != 0.0) {
          ++shared;
        } else {
          free_slots.emplace_back(i, j);
        }
      }
    }
  }
  const double delta = spec.local_edge_ratio;
  const auto wanted = static_cast<std::size_t>(std::lround(delta / (1.0 - delta) * static_cast<double>(shared)));
  if (wanted > free_slots.size()) {
    throw Error(ErrorKind::InsufficientZeroPositions,
                std::to_string(wanted) + " local edges requested but only " + std::to_string(free_slots.size()) +
                    " zero positions inside the modules");
  }
  Matrix out = global;
  std::uniform_real_distribution<double> weight(spec.perturb_low, spec.perturb_high);
  for (std::size_t e = 0; e < wanted; ++e) {
    std::uniform_int_distribution<std::size_t> pick(e, free_slots.size() - 1);
    std::swap(free_slots[e], free_slots[pick(rng)]);
    const auto [i, j] = free_slots[e];
    out(i, j) = out(j, i) = nonzero_draw(weight, rng);
  }
  make_diagonally_dominant(out, spec.pd_margin);
  return out;
}

GroundTruth generate(const SynthSpec& spec) {
  if (spec.categories > 0) return generate_categorical(spec);
  spec.validate();
  GroundTruth out;
  out.genes = default_gene_names(spec.p);
  out.tree = generate_hypergraph(spec.populations, spec.seed);
  const auto nets = generate_network_cascade(spec, out.tree);
  for (int k = 0; k < spec.populations; ++k) {
    out.precision.push_back(SparseSymmetric::from_dense(nets[k]));
    out.data.push_back(sample_data(nets[k], spec.samples(), spec.seed ^ (0x9e3779b97f4a7c15ull * (k + 1)), out.genes));
  }
  return out;
}

GroundTruth generate_categorical(const SynthSpec& spec) {
  spec.validate();
  if (spec.categories < 1) throw Error(ErrorKind::InvalidArgument, "synth: categorical mode needs categories >= 1");
  GroundTruth out;
  out.genes = default_gene_names(spec.p);
  out.tree = generate_hypergraph(spec.populations, spec.seed);
  const auto nets = generate_network_cascade(spec, out.tree);
  auto rng = stream(spec.seed, kLocal);
  const int C = spec.categories;
  out.cell_precision.resize(spec.populations);
  out.cell_data.resize(spec.populations);
  for (int k = 0; k < spec.populations; ++k) {
    out.precision.push_back(SparseSymmetric::from_dense(nets[k]));
    for (int c = 0; c < C; ++c) {
      const Matrix cell = add_local_edges(nets[k], spec, rng);
      out.cell_precision[k].push_back(SparseSymmetric::from_dense(cell));
      const std::uint64_t seed = spec.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(k * C + c + 1));
      out.cell_data[k].push_back(sample_data(cell, spec.samples(), seed, out.genes));
    }
  }
  return out;
}

}  // namespace elem0
