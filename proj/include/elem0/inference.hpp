#pragma once

#include "elem0/covmap.hpp"
#include "elem0/model.hpp"

#include <vector>

namespace elem0 {

// Runs the whole pipeline: validation, covariances, backward maps and the
// per-coordinate solves. Gene order of the result is population 1's.
PrecisionSet elem0_infer(const std::vector<ExpressionMatrix>& data, const TreeHypergraph& tree,
                         const SolverConfig& cfg);

// Coordinate solves only, for callers that already hold the maps (grid
// search reuses one map set per nu). Fills networks, objective and the
// solve timing; the caller owns the rest of the metadata.
PrecisionSet elem0_solve(const BackwardMapSet& maps, const TreeHypergraph& tree, const SolverConfig& cfg,
                         std::vector<std::string> genes = {});

// Full objective recomputed from the stored entries. Off-diagonal entries
// count twice (both triangles) in every term.
double elem0_objective(const PrecisionSet& precision, const BackwardMapSet& maps, const SolverConfig& cfg,
                       const TreeHypergraph& tree);

// Objective of each coordinate subproblem at the stored solution, indexed
// like the upper triangle including the diagonal: (i, j) with i <= j.
// The full objective is sum(diagonal) + 2 * sum(off-diagonal).
Matrix coordinate_objectives(const PrecisionSet& precision, const BackwardMapSet& maps, const SolverConfig& cfg,
                             const TreeHypergraph& tree);

bool is_positive_definite(const Matrix& m);

}  // namespace elem0
