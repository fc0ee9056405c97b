#pragma once

#include "elem0/covmap.hpp"
#include "elem0/model.hpp"

#include <limits>
#include <vector>

namespace elem0 {

inline constexpr double kInfeasibleScore = std::numeric_limits<double>::infinity();

struct ParameterGrid {
  std::vector<double> gamma;
  std::vector<double> lambda;
  std::vector<double> nu;

  std::size_t size() const { return gamma.size() * lambda.size() * nu.size(); }
  void validate() const;
};

// sum_k n_k [tr(S_k T_k) - log det T_k] + log(n_k) df_k + 4 df_k log p, with
// df_k the number of nonzero upper-triangle entries. +inf when any T_k is
// not positive definite.
double ebic_score(const std::vector<SparseSymmetric>& networks, const std::vector<SampleCovariance>& covs);
double ebic_score(const PrecisionSet& precision, const std::vector<SampleCovariance>& covs);
// Same score with caller-supplied degrees of freedom per network.
double ebic_score(const std::vector<SparseSymmetric>& networks, const std::vector<SampleCovariance>& covs,
                  const std::vector<double>& df);

struct ScoreRow {
  double gamma = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
  double ebic = 0.0;
  std::size_t df_total = 0;
};

struct SelectionResult {
  ScoreRow best;
  std::vector<ScoreRow> table;  // nu outermost, then gamma, then lambda
  PrecisionSet model;           // estimate at the selected tuple
};

// True when `a` should be preferred over `b` at equal scores: larger lambda,
// then smaller gamma, then smaller nu.
bool tie_break_less(const ScoreRow& a, const ScoreRow& b);

// Index of the best row; throws AllConfigurationsInfeasible when every score
// is +inf.
std::size_t best_row(const std::vector<ScoreRow>& table);

// Backward maps are computed once per nu and shared by all (gamma, lambda).
// Other solver settings come from `base`.
SelectionResult select_parameters(const std::vector<ExpressionMatrix>& data, const TreeHypergraph& tree,
                                  const ParameterGrid& grid, const SolverConfig& base = {});

struct CategoricalSelectionResult {
  ScoreRow best;
  std::vector<ScoreRow> table;
  CategoricalPrecisionSet model;
};

// Same search for the categorical model, scored on the K*C total networks.
// data is indexed [k][c].
CategoricalSelectionResult select_categorical_parameters(const std::vector<std::vector<ExpressionMatrix>>& data,
                                                         const TreeHypergraph& tree, const ParameterGrid& grid,
                                                         const SolverConfig& base = {});

}  // namespace elem0
