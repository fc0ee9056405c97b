#include <doctest.h>

#include "elem0/evalkit.hpp"
#include "support.hpp"

#include <set>

using namespace elem0;

namespace {

SparseSymmetric graph(int p, std::initializer_list<std::pair<int, int>> edges, double value = 1.0) {
  Matrix m = Matrix::Identity(p, p);
  for (auto [i, j] : edges) m(i, j) = m(j, i) = value;
  return SparseSymmetric::from_dense(m);
}

SparseSymmetric random_graph(int p, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U;
  Matrix m = Matrix::Identity(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (U(rng) < density) m(i, j) = m(j, i) = U(rng) - 0.5;
  return SparseSymmetric::from_dense(m);
}

}  // namespace

TEST_CASE("edge metrics") {
  const auto t = graph(4, {{0, 1}, {0, 2}});
  auto same = score_network(t, t);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  auto half = score_network(t, graph(4, {{0, 1}}));
  CHECK(half.precision == 1.0);
  CHECK(half.recall == 0.5);
  CHECK(half.f1 == doctest::Approx(2.0 / 3.0));

  auto disjoint = score_network(t, graph(4, {{2, 3}}));
  CHECK(disjoint.precision == 0.0);
  CHECK(disjoint.recall == 0.0);
  CHECK(disjoint.f1 == 0.0);

  const auto empty = graph(4, {});
  auto both = score_network(empty, empty);
  CHECK(both.precision == 1.0);
  CHECK(both.recall == 1.0);
  CHECK(both.f1 == 1.0);
  auto none_predicted = score_network(t, empty);
  CHECK(none_predicted.precision == 0.0);
  CHECK(none_predicted.f1 == 0.0);
  auto none_true = score_network(empty, t);
  CHECK(none_true.recall == 0.0);
  CHECK(none_true.f1 == 0.0);

  CHECK_THROWS_AS(score_network(t, graph(5, {})), Error);
}

TEST_CASE("f1 is the harmonic mean and survives relabelling") {
  std::mt19937_64 rng(71);
  for (int it = 0; it < 30; ++it) {
    const auto a = random_graph(12, 0.3, rng);
    const auto b = random_graph(12, 0.3, rng);
    const auto m = score_network(a, b);
    if (m.precision + m.recall > 0.0) {
      CHECK(std::abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) <= 1e-12);
    }
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(Eigen::Map<Eigen::VectorXi>(perm.data(), 12));
    const auto pa = SparseSymmetric::from_dense(P * a.to_dense() * P.transpose());
    const auto pb = SparseSymmetric::from_dense(P * b.to_dense() * P.transpose());
    const auto pm = score_network(pa, pb);
    CHECK(pm.precision == m.precision);
    CHECK(pm.recall == m.recall);
    CHECK(pm.f1 == m.f1);
  }
}

TEST_CASE("macro average") {
  const auto t = graph(4, {{0, 1}, {0, 2}});
  const auto r = score({t, t}, {t, graph(4, {{0, 1}})});
  REQUIRE(r.populations.size() == 2);
  CHECK(r.macro.recall == doctest::Approx(0.75));
  CHECK(r.macro.true_positives == 3);
  CHECK_THROWS_AS(score({t}, {t, t}), Error);
}

TEST_CASE("differential edges") {
  const auto a = graph(4, {{0, 1}});
  auto same = differential_edges({a}, {a});
  CHECK(same[0].gained.empty());
  CHECK(same[0].lost.empty());
  CHECK(same[0].changed.empty());

  auto gained = differential_edges({graph(4, {})}, {a});
  REQUIRE(gained[0].gained.size() == 1);
  CHECK(gained[0].gained[0].i == 0);
  CHECK(gained[0].gained[0].j == 1);

  auto changed = differential_edges({a}, {graph(4, {{0, 1}}, 1.5)}, 0.4);
  CHECK(changed[0].changed.size() == 1);
  changed = differential_edges({a}, {graph(4, {{0, 1}}, 1.5)}, 0.6);
  CHECK(changed[0].changed.empty());

  std::mt19937_64 rng(73);
  for (int it = 0; it < 20; ++it) {
    const auto x = random_graph(10, 0.3, rng);
    const auto y = random_graph(10, 0.3, rng);
    std::set<std::pair<int, int>> sx, sy;
    for (const auto& e : x.edges) sx.insert({e.i, e.j});
    for (const auto& e : y.edges) sy.insert({e.i, e.j});
    std::vector<std::pair<int, int>> only_y, only_x;
    std::set_difference(sy.begin(), sy.end(), sx.begin(), sx.end(), std::back_inserter(only_y));
    std::set_difference(sx.begin(), sx.end(), sy.begin(), sy.end(), std::back_inserter(only_x));
    const auto d = differential_edges({x}, {y})[0];
    CHECK(d.gained.size() == only_y.size());
    CHECK(d.lost.size() == only_x.size());
    for (std::size_t r = 1; r < d.gained.size(); ++r)
      CHECK(std::abs(d.gained[r - 1].after) >= std::abs(d.gained[r].after));
  }
}
