#pragma once

#include "elem0/model.hpp"

#include <random>
#include <string>
#include <vector>

namespace testing {

// Random labelled tree: vertex v attaches to a uniformly chosen earlier vertex.
inline elem0::TreeHypergraph random_tree(int K, std::mt19937_64& rng, double wmax = 2.0) {
  std::uniform_real_distribution<double> w(0.0, wmax);
  std::vector<elem0::TreeEdge> edges;
  for (int v = 1; v < K; ++v) {
    double weight = 0.0;
    while (weight <= 0.0) weight = w(rng);
    edges.push_back({static_cast<int>(rng() % v), v, weight});
  }
  return elem0::TreeHypergraph::create(K, edges);
}

inline elem0::TreeHypergraph path_tree(int K) {
  std::vector<elem0::TreeEdge> edges;
  for (int v = 1; v < K; ++v) edges.push_back({v - 1, v, 1.0});
  return elem0::TreeHypergraph::create(K, edges);
}

inline elem0::ExpressionMatrix random_expression(int p, int n, std::mt19937_64& rng,
                                                 const std::string& sample_prefix = "s") {
  std::normal_distribution<double> N;
  elem0::ExpressionMatrix x;
  for (int i = 0; i < p; ++i) x.genes.push_back("g" + std::to_string(i + 1));
  for (int s = 0; s < n; ++s) x.samples.push_back(sample_prefix + std::to_string(s + 1));
  x.values.resize(p, n);
  for (int i = 0; i < p; ++i)
    for (int s = 0; s < n; ++s) x.values(i, s) = N(rng);
  return x;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace testing
