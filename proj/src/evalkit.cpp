#include "elem0/evalkit.hpp"

#include <algorithm>
#include <cmath>

namespace elem0 {

namespace {

void check_pair(const SparseSymmetric& a, const SparseSymmetric& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorKind::ShapeMismatch, "networks have " + std::to_string(a.dimension()) + " and " +
                                              std::to_string(b.dimension()) + " genes");
  }
}

using Entry = SparseSymmetric::Entry;

bool before(const SparseSymmetric::Entry& x, const SparseSymmetric::Entry& y) {
  return std::pair(x.i, x.j) < std::pair(y.i, y.j);
}

// Walks two sorted edge lists in step; f(a_entry_or_null, b_entry_or_null).
template <typename F>
void merge_walk(const std::vector<SparseSymmetric::Entry>& a, const std::vector<SparseSymmetric::Entry>& b, F&& f) {
  std::size_t x = 0, y = 0;
  while (x < a.size() || y < b.size()) {
    if (y == b.size() || (x < a.size() && before(a[x], b[y]))) {
      f(&a[x++], nullptr);
    } else if (x == a.size() || before(b[y], a[x])) {
      f(nullptr, &b[y++]);
    } else {
      f(&a[x++], &b[y++]);
    }
  }
}

std::vector<SparseSymmetric::Entry> sorted_edges(const SparseSymmetric& net) {
  auto edges = net.edges;
  std::erase_if(edges, [](const auto& e) { return e.value == 0.0; });
  std::sort(edges.begin(), edges.end(), before);
  return edges;
}

void sort_by_magnitude(std::vector<EdgeChange>& list, bool use_after) {
  std::stable_sort(list.begin(), list.end(), [&](const EdgeChange& x, const EdgeChange& y) {
    const double mx = std::abs(use_after ? x.after : x.before);
    const double my = std::abs(use_after ? y.after : y.before);
    return mx > my;
  });
}

}  // namespace

Metrics score_network(const SparseSymmetric& truth, const SparseSymmetric& estimate) {
  check_pair(truth, estimate);
  Metrics m;
  double squared = 0.0;
  merge_walk(sorted_edges(truth), sorted_edges(estimate), [&](const Entry* t, const Entry* e) {
    if (t && e) {
      ++m.true_positives;
      squared += (t->value - e->value) * (t->value - e->value);
    } else if (t) {
      ++m.false_negatives;
      squared += t->value * t->value;
    } else {
      ++m.false_positives;
      squared += e->value * e->value;
    }
  });
  const double tp = static_cast<double>(m.true_positives);
  const double predicted = tp + static_cast<double>(m.false_positives);
  const double actual = tp + static_cast<double>(m.false_negatives);
  if (predicted == 0.0 && actual == 0.0) {
    m.precision = m.recall = m.f1 = 1.0;
  } else {
    m.precision = predicted > 0.0 ? tp / predicted : 0.0;
    m.recall = actual > 0.0 ? tp / actual : 0.0;
    const double s = m.precision + m.recall;
    m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  }
  const double pairs = static_cast<double>(truth.dimension()) * (truth.dimension() - 1) / 2.0;
  m.rmse = pairs > 0.0 ? std::sqrt(squared / pairs) : 0.0;
  return m;
}

ScoreReport score(const std::vector<SparseSymmetric>& truth, const std::vector<SparseSymmetric>& estimate) {
  if (truth.size() != estimate.size()) {
    throw Error(ErrorKind::ShapeMismatch, "truth has " + std::to_string(truth.size()) + " populations, estimate has " +
                                              std::to_string(estimate.size()));
  }
  ScoreReport out;
  for (std::size_t k = 0; k < truth.size(); ++k) out.populations.push_back(score_network(truth[k], estimate[k]));
  if (out.populations.empty()) return out;
  const double n = static_cast<double>(out.populations.size());
  for (const auto& m : out.populations) {
    out.macro.precision += m.precision / n;
    out.macro.recall += m.recall / n;
    out.macro.f1 += m.f1 / n;
    out.macro.rmse += m.rmse / n;
    out.macro.true_positives += m.true_positives;
    out.macro.false_positives += m.false_positives;
    out.macro.false_negatives += m.false_negatives;
  }
  return out;
}

ScoreReport score(const PrecisionSet& truth, const PrecisionSet& estimate) {
  return score(truth.networks, estimate.networks);
}

std::vector<DifferentialEdges> differential_edges(const std::vector<SparseSymmetric>& a,
                                                  const std::vector<SparseSymmetric>& b, double tau) {
  if (a.size() != b.size()) throw Error(ErrorKind::ShapeMismatch, "population counts differ");
  if (!(tau >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be non-negative");
  std::vector<DifferentialEdges> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    check_pair(a[k], b[k]);
    auto& d = out[k];
    merge_walk(sorted_edges(a[k]), sorted_edges(b[k]), [&](const Entry* x, const Entry* y) {
      if (x && y) {
        if (std::abs(y->value - x->value) > tau) d.changed.push_back({x->i, x->j, x->value, y->value});
      } else if (x) {
        d.lost.push_back({x->i, x->j, x->value, 0.0});
      } else {
        d.gained.push_back({y->i, y->j, 0.0, y->value});
      }
    });
    sort_by_magnitude(d.gained, true);
    sort_by_magnitude(d.lost, false);
    sort_by_magnitude(d.changed, true);
  }
  return out;
}

}  // namespace elem0
