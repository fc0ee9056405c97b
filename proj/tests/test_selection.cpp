#include <doctest.h>

#include "elem0/evalkit.hpp"
#include "elem0/inference.hpp"
#include "elem0/selection.hpp"
#include "elem0/synth.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>

using namespace elem0;

TEST_CASE("eBIC of the identity") {
  const auto id = SparseSymmetric::from_dense(Matrix::Identity(2, 2));
  CHECK(ebic_score({id}, {SampleCovariance{Matrix::Identity(2, 2), 10}}) == doctest::Approx(20.0));
}

TEST_CASE("eBIC of an indefinite estimate is infinite") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  CHECK(ebic_score({SparseSymmetric::from_dense(m)}, {SampleCovariance{Matrix::Identity(2, 2), 10}}) ==
        kInfeasibleScore);
}

TEST_CASE("eBIC against an eigenvalue evaluation") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> N;
  for (int it = 0; it < 10; ++it) {
    std::vector<SparseSymmetric> nets;
    std::vector<SampleCovariance> covs;
    double oracle = 0.0;
    for (int k = 0; k < 2; ++k) {
      Matrix a(4, 4);
      for (auto& v : a.reshaped()) v = N(rng);
      Matrix theta = a * a.transpose() + Matrix::Identity(4, 4);
      if (it % 2) theta(0, 3) = theta(3, 0) = 0.0;
      theta(1, 2) = theta(2, 1) = 0.0;
      Matrix b(4, 4);
      for (auto& v : b.reshaped()) v = N(rng);
      const Matrix s = b * b.transpose() / 4.0;
      const Eigen::Index n = 20 + 5 * k;
      nets.push_back(SparseSymmetric::from_dense(theta));
      covs.push_back({s, n});
      Eigen::SelfAdjointEigenSolver<Matrix> eig(theta);
      REQUIRE(eig.eigenvalues().minCoeff() > 0.0);
      double df = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) df += theta(i, j) != 0.0;
      oracle += n * ((s * theta).trace() - eig.eigenvalues().array().log().sum()) + std::log(double(n)) * df +
                4.0 * df * std::log(4.0);
    }
    CHECK(ebic_score(nets, covs) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("best row and tie breaking") {
  const double inf = kInfeasibleScore;
  std::vector<ScoreRow> table = {{0.1, 0.1, 0.0, inf, 0}, {0.1, 0.2, 0.0, 5.0, 0}};
  CHECK(best_row(table) == 1);
  table = {{1.0, 0.1, 0.0, 3.0, 0}, {0.1, 0.1, 0.0, 3.0, 0}, {0.1, 0.2, 0.1, 3.0, 0}, {0.1, 0.2, 0.0, 3.0, 0}};
  CHECK(best_row(table) == 3);
  table = {{0.1, 0.1, 0.0, inf, 0}};
  try {
    best_row(table);
    FAIL("expected AllConfigurationsInfeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AllConfigurationsInfeasible);
  }
}

TEST_CASE("grid validation") {
  ParameterGrid g{{0.1}, {0.0, 0.1}, {0.0}};
  CHECK_NOTHROW(g.validate());
  g.lambda.clear();
  CHECK_THROWS_AS(g.validate(), Error);
  g = {{-1.0}, {0.1}, {0.0}};
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("grid search on a benchmark instance") {
  SynthSpec spec;
  spec.p = 40;
  spec.modules = 4;
  spec.populations = 4;
  spec.n_over_p = 10;
  spec.seed = 5;
  const auto truth = generate(spec);

  SUBCASE("single tuple") {
    ParameterGrid g{{0.3}, {0.05}, {0.05}};
    const auto sel = select_parameters(truth.data, truth.tree, g);
    CHECK(sel.best.gamma == 0.3);
    CHECK(sel.best.lambda == 0.05);
    CHECK(sel.best.nu == 0.05);
    CHECK(sel.table.size() == 1);
    SolverConfig cfg;
    cfg.gamma = 0.3;
    cfg.lambda = 0.05;
    cfg.nu = 0.05;
    const auto direct = elem0_infer(truth.data, truth.tree, cfg);
    for (int k = 0; k < spec.populations; ++k) CHECK(direct.networks[k].edges == sel.model.networks[k].edges);
  }

  SUBCASE("selected model beats the worst tuple and is repeatable") {
    ParameterGrid g{{0.1, 1.0}, {0.005, 0.05, 0.2}, {0.0, 0.05}};
    const auto sel = select_parameters(truth.data, truth.tree, g);
    CHECK(sel.table.size() == g.size());
    const double chosen = score(truth.precision, sel.model.networks).macro.f1;
    double worst = 1.0;
    for (const auto& row : sel.table) {
      SolverConfig cfg;
      cfg.gamma = row.gamma;
      cfg.lambda = row.lambda;
      cfg.nu = row.nu;
      worst = std::min(worst, score(truth.precision, elem0_infer(truth.data, truth.tree, cfg).networks).macro.f1);
    }
    CHECK(chosen >= worst);

    const auto again = select_parameters(truth.data, truth.tree, g);
    REQUIRE(again.table.size() == sel.table.size());
    for (std::size_t r = 0; r < sel.table.size(); ++r) {
      CHECK(again.table[r].ebic == sel.table[r].ebic);
      CHECK(again.table[r].df_total == sel.table[r].df_total);
    }
    CHECK(again.best.lambda == sel.best.lambda);
    CHECK(again.best.gamma == sel.best.gamma);
    CHECK(again.best.nu == sel.best.nu);
  }
}
