#pragma once

#include "elem0/model.hpp"

#include <vector>

namespace elem0 {

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double rmse = 0.0;  // over all off-diagonal pairs, values included
};

// Support comparison on unordered off-diagonal pairs. Conventions: no
// predicted edges gives precision 0, no true edges gives recall 0, P + R = 0
// gives F1 0, and two empty graphs score 1 everywhere.
Metrics score_network(const SparseSymmetric& truth, const SparseSymmetric& estimate);

struct ScoreReport {
  std::vector<Metrics> populations;
  Metrics macro;  // unweighted mean over populations (counts are summed)
};

ScoreReport score(const std::vector<SparseSymmetric>& truth, const std::vector<SparseSymmetric>& estimate);
ScoreReport score(const PrecisionSet& truth, const PrecisionSet& estimate);

struct EdgeChange {
  int i = 0;
  int j = 0;
  double before = 0.0;
  double after = 0.0;
};

struct DifferentialEdges {
  std::vector<EdgeChange> gained;   // in b only, by |after| descending
  std::vector<EdgeChange> lost;     // in a only, by |before| descending
  std::vector<EdgeChange> changed;  // in both with |after - before| > tau, by |after| descending
};

std::vector<DifferentialEdges> differential_edges(const std::vector<SparseSymmetric>& a,
                                                  const std::vector<SparseSymmetric>& b, double tau = 0.0);

}  // namespace elem0
