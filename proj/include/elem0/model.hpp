#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elem0 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  InvalidArgument,
  MismatchedGeneSets,
  NotATree,
  NonFiniteInput,
  SingularAfterJitter,
  TooLargeForOracle,
  AllConfigurationsInfeasible,
  InsufficientZeroPositions,
  NotPositiveDefinite,
  ShapeMismatch,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Errors caused by what the caller handed in (as opposed to a numerical
// failure during computation). The CLI maps these to exit code 2.
bool is_input_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Observations for one population: genes are rows, samples are columns.
struct ExpressionMatrix {
  std::vector<std::string> genes;
  std::vector<std::string> samples;
  Matrix values;

  Eigen::Index gene_count() const { return values.rows(); }
  Eigen::Index sample_count() const { return values.cols(); }

  // Throws NonFiniteInput / InvalidArgument.
  void validate() const;
};

// Undirected weighted edge between populations. Indices are 0-based here;
// files are 1-based and converted in io.
struct TreeEdge {
  int u = 0;
  int v = 0;
  double weight = 1.0;

  friend bool operator==(const TreeEdge&, const TreeEdge&) = default;
};

// Weighted spanning tree over K populations. Construction validates the
// tree invariants, so every instance is a valid tree.
class TreeHypergraph {
 public:
  TreeHypergraph() = default;

  // Normalizes edges to u < v. Throws NotATree / InvalidArgument.
  static TreeHypergraph create(int node_count, std::vector<TreeEdge> edges);

  // Empty string when valid; otherwise a description of the first problem.
  static std::string diagnose(int node_count, const std::vector<TreeEdge>& edges);

  int node_count() const { return node_count_; }
  const std::vector<TreeEdge>& edges() const { return edges_; }

  struct Neighbor {
    int node;
    double weight;
  };
  const std::vector<Neighbor>& neighbors(int k) const { return adjacency_[k]; }
  int degree(int k) const { return static_cast<int>(adjacency_[k].size()); }

  // Weighted Laplacian L_W (dense, K x K).
  Matrix laplacian() const;

 private:
  int node_count_ = 0;
  std::vector<TreeEdge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

struct SolverConfig {
  double lambda = 0.0;
  double gamma = 0.0;
  double nu = 0.0;
  std::vector<double> nu_per_population;  // empty: use nu everywhere
  double alpha = 0.01;
  bool center_data = true;
  double pd_jitter_start = 1e-6;
  double pd_jitter_cap = 1e-2;
  double envelope_tolerance = 1e-12;
  int threads = 1;

  double nu_for(int population) const;
  void validate() const;
};

// Symmetric p x p matrix stored as its diagonal plus the nonzero strict upper
// triangle.
struct SparseSymmetric {
  struct Entry {
    int i;
    int j;
    double value;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Vector diagonal;
  std::vector<Entry> edges;  // i < j, value != 0, sorted by (i, j)

  int dimension() const { return static_cast<int>(diagonal.size()); }

  // Keeps entries of the upper triangle that are exactly nonzero.
  static SparseSymmetric from_dense(const Matrix& m);
  Matrix to_dense() const;
  std::size_t edge_count() const { return edges.size(); }
};

struct StageTimings {
  double covariance_s = 0.0;
  double backward_map_s = 0.0;
  double solve_s = 0.0;
  double total_s = 0.0;
};

struct RunMetadata {
  SolverConfig config;
  std::vector<double> jitter;  // per population, 0 when no repair was needed
  StageTimings timings;
  double objective = 0.0;
  std::vector<bool> positive_definite;  // per population, of the estimate
};

struct PrecisionSet {
  std::vector<std::string> genes;
  std::vector<SparseSymmetric> networks;
  RunMetadata metadata;

  int population_count() const { return static_cast<int>(networks.size()); }
  std::size_t total_edges() const;
};

struct CategoricalPrecisionSet {
  std::vector<std::string> genes;
  int categories = 0;
  std::vector<SparseSymmetric> global;              // [k]
  std::vector<std::vector<SparseSymmetric>> local;  // [k][c]
  RunMetadata metadata;

  int population_count() const { return static_cast<int>(global.size()); }

  // global + local, computed entrywise.
  SparseSymmetric total(int k, int c) const;
};

SparseSymmetric add(const SparseSymmetric& a, const SparseSymmetric& b);

struct RunContext {
  std::vector<std::string> genes;       // population 1's order
  std::vector<ExpressionMatrix> data;   // re-ordered to `genes`
  TreeHypergraph tree;
  SolverConfig config;
};

// Checks population count against the tree, matches gene sets by name and
// reorders every matrix to the first population's gene order. All problems
// found are listed in the thrown message.
RunContext validate_run_inputs(std::vector<ExpressionMatrix> data, const TreeHypergraph& tree,
                               const SolverConfig& cfg);

}  // namespace elem0
