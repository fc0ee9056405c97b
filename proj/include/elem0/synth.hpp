#pragma once

#include "elem0/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace elem0 {

struct SynthSpec {
  int p = 100;
  int populations = 5;
  double n_over_p = 20.0;
  int modules = 10;
  int ba_edges = 1;
  int perturb_modules = 3;
  double weight_low = 0.5;
  double weight_high = 1.0;
  double perturb_low = -1.0;
  double perturb_high = 1.0;
  double pd_margin = 0.1;
  std::uint64_t seed = 1;
  int categories = 0;            // 0: standard mode
  double local_edge_ratio = 0.0; // delta, categorical mode only

  int samples() const;
  void validate() const;
};

// Perturbations leaving an edge smaller than this are redrawn.
inline constexpr double kMinPerturbedMagnitude = 1e-3;

struct GroundTruth {
  std::vector<std::string> genes;
  TreeHypergraph tree;
  std::vector<SparseSymmetric> precision;                   // [k]; the global network in categorical mode
  std::vector<ExpressionMatrix> data;                       // [k]; empty in categorical mode
  std::vector<std::vector<SparseSymmetric>> cell_precision; // [k][c], categorical mode
  std::vector<std::vector<ExpressionMatrix>> cell_data;     // [k][c], categorical mode
};

// Kruskal on the upper triangle of a symmetric distance matrix; ties go to
// the smaller (i, j). Every retained edge gets weight 1.
TreeHypergraph mst_from_distances(const Matrix& distances);

// MST of a symmetric K x K matrix of |N(0,1)| draws.
TreeHypergraph generate_hypergraph(int populations, std::uint64_t seed);

// Off-diagonal adjacency of one preferential-attachment module of `size`
// nodes, weights +-U[low, high].
Matrix ba_module(int size, int edges_per_node, double low, double high, std::mt19937_64& rng);

// Sets every diagonal entry to the row's absolute off-diagonal sum plus
// margin, which makes the matrix strictly diagonally dominant.
void make_diagonally_dominant(Matrix& m, double margin);

// True precision matrices along a BFS of the tree from population 1.
std::vector<Matrix> generate_network_cascade(const SynthSpec& spec, const TreeHypergraph& tree);

// n columns from N(0, theta^{-1}). Throws NotPositiveDefinite.
ExpressionMatrix sample_data(const Matrix& theta, int n, std::uint64_t seed,
                             const std::vector<std::string>& genes = {});

// Adds local edges to a copy of `global` at previously zero positions inside
// the diagonal blocks. Throws InsufficientZeroPositions.
Matrix add_local_edges(const Matrix& global, const SynthSpec& spec, std::mt19937_64& rng);

// Full benchmark instance; categorical when spec.categories > 0.
GroundTruth generate(const SynthSpec& spec);
GroundTruth generate_categorical(const SynthSpec& spec);

std::vector<std::string> default_gene_names(int p);

}  // namespace elem0
