#pragma once

#include "elem0/covmap.hpp"
#include "elem0/model.hpp"
#include "elem0/treesolve.hpp"

#include <vector>

namespace elem0 {

// One coordinate of the categorical objective:
//
//   sum_{k,c} (g_k + l_kc - f_kc)^2 + gamma sum_{(k,l)} W_kl (g_k - g_l)^2
//   + lambda [#nonzero g + #nonzero l]   (only when `sparse`)
//   + alpha [sum g^2 + sum l^2]
struct CategoricalCoordinate {
  Matrix targets;  // K x C
  double lambda = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  TreeHypergraph tree;
  bool sparse = true;

  int populations() const { return static_cast<int>(targets.rows()); }
  int categories() const { return static_cast<int>(targets.cols()); }
  void validate() const;
  double evaluate(const Vector& global, const Matrix& local) const;

  // Globals take indices 0..K-1 (rooted at population 0); local (k, c) is
  // index K + k*C + c and hangs off global k.
  RootedQuadraticProblem rooted() const;
};

struct CategoricalSolution {
  Vector global;  // K
  Matrix local;   // K x C
  double objective = 0.0;
};

CategoricalSolution solve_categorical_coordinate(const CategoricalCoordinate& problem);

// Support enumeration over all K + K*C variables with a dense solve of the
// objective written out directly. Throws TooLargeForOracle past
// kMaxOracleSize variables.
CategoricalSolution brute_force_categorical(const CategoricalCoordinate& problem);

struct CategoricalProblem {
  std::vector<std::vector<ExpressionMatrix>> data;  // [k][c]
  TreeHypergraph tree;
  SolverConfig cfg;
};

struct CategoricalContext {
  std::vector<std::string> genes;
  std::vector<ExpressionMatrix> cells;  // k*C + c, rows in `genes` order
  int categories = 0;
};

// Checks shapes (C >= 2, alpha > 0, same C everywhere) and gene sets, and
// reorders every cell to the gene order of cell (1, 1).
CategoricalContext validate_categorical_inputs(const std::vector<std::vector<ExpressionMatrix>>& data,
                                               const TreeHypergraph& tree, const SolverConfig& cfg);

// nu_for(k) repeated for each category, in map order k*C + c.
SolverConfig expand_nu_per_cell(const SolverConfig& cfg, int populations, int categories);

// Validates, computes K*C backward maps and solves every coordinate.
CategoricalPrecisionSet categorical_infer(const CategoricalProblem& problem);

// Maps are ordered k*C + c.
CategoricalPrecisionSet categorical_solve(const BackwardMapSet& maps, int categories, const TreeHypergraph& tree,
                                          const SolverConfig& cfg, std::vector<std::string> genes = {});

// Literal objective; off-diagonal entries count in both triangles.
double categorical_objective(const CategoricalPrecisionSet& result, const BackwardMapSet& maps,
                             const SolverConfig& cfg, const TreeHypergraph& tree);

}  // namespace elem0
