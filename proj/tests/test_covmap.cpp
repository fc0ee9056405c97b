#include <doctest.h>

#include "elem0/covmap.hpp"
#include "support.hpp"

using namespace elem0;

namespace {

ExpressionMatrix from(const Matrix& values) {
  ExpressionMatrix x;
  for (int i = 0; i < values.rows(); ++i) x.genes.push_back("g" + std::to_string(i));
  for (int s = 0; s < values.cols(); ++s) x.samples.push_back("s" + std::to_string(s));
  x.values = values;
  return x;
}

SampleCovariance cov_of(const Matrix& m, Eigen::Index n = 10) { return {m, n}; }

}  // namespace

TEST_CASE("sample covariance") {
  Matrix x(2, 2);
  x << 1, -1, 1, -1;
  const auto s = sample_covariance(from(x), false);
  CHECK(s.matrix == Matrix::Ones(2, 2));
  CHECK(s.samples == 2);

  Matrix constant(3, 4);
  constant << 1, 1, 1, 1, 2, 2, 2, 2, -3, -3, -3, -3;
  CHECK(sample_covariance(from(constant), true).matrix.cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(11);
  const auto r = testing::random_expression(5, 200, rng);
  for (bool center : {false, true}) {
    const auto got = sample_covariance(r, center).matrix;
    Vector mean = Vector::Zero(5);
    if (center) {
      for (int i = 0; i < 5; ++i) {
        for (int t = 0; t < 200; ++t) mean[i] += r.values(i, t);
        mean[i] /= 200.0;
      }
    }
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        double acc = 0.0;
        for (int t = 0; t < 200; ++t) acc += (r.values(i, t) - mean[i]) * (r.values(j, t) - mean[j]);
        worst = std::max(worst, std::abs(acc / 200.0 - got(i, j)));
      }
    }
    CHECK(worst < 1e-12);
    CHECK(got == got.transpose());
  }
}

TEST_CASE("soft threshold") {
  Matrix m(3, 3);
  m << 1.0, 0.5, -0.1, 0.5, 2.0, -0.7, -0.1, -0.7, 3.0;
  const Matrix t = soft_threshold(m, 0.3);
  CHECK(t(0, 1) == doctest::Approx(0.2));
  CHECK(t(0, 2) == 0.0);
  CHECK(t(1, 2) == doctest::Approx(-0.4));
  CHECK(t(0, 0) == 1.0);
  CHECK(t == t.transpose());
  CHECK(soft_threshold(m, 0.0) == m);
  CHECK(soft_threshold(m, 0.7) == Matrix(m.diagonal().asDiagonal()));
  CHECK(soft_threshold(t, 0.0) == t);

  std::mt19937_64 rng(5);
  const auto r = testing::random_expression(6, 30, rng);
  const Matrix s = sample_covariance(r, true).matrix;
  Matrix prev = s;
  for (double nu : {0.05, 0.1, 0.2, 0.4}) {
    const Matrix cur = soft_threshold(s, nu);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        if (i != j) CHECK(std::abs(cur(i, j)) <= std::abs(prev(i, j)));
    prev = cur;
  }
}

TEST_CASE("backward map") {
  const SolverConfig cfg;
  for (double nu : {0.0, 0.5, 3.0}) {
    const auto b = backward_map(cov_of(Matrix::Identity(4, 4)), nu, cfg);
    CHECK(b.inverse.isApprox(Matrix::Identity(4, 4)));
    CHECK(b.jitter == 0.0);
  }
  Matrix s(2, 2);
  s << 2, 1, 1, 2;
  const auto b = backward_map(cov_of(s), 1.0, cfg);
  CHECK(b.inverse(0, 0) == doctest::Approx(0.5));
  CHECK(b.inverse(1, 1) == doctest::Approx(0.5));
  CHECK(b.inverse(0, 1) == 0.0);

  std::mt19937_64 rng(21);
  const auto r = testing::random_expression(20, 200, rng);
  const auto cov = sample_covariance(r, true);
  const auto m = backward_map(cov, 0.05, cfg);
  const Matrix a = soft_threshold(cov.matrix, 0.05) + m.jitter * Matrix::Identity(20, 20);
  CHECK((a * m.inverse - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(m.inverse == m.inverse.transpose());
}

TEST_CASE("jitter repairs a singular covariance and gives up at the cap") {
  std::mt19937_64 rng(8);
  const auto r = testing::random_expression(12, 4, rng);  // n < p: rank deficient
  const auto cov = sample_covariance(r, true);
  SolverConfig cfg;
  const auto m = backward_map(cov, 0.0, cfg);
  CHECK(m.jitter >= cfg.pd_jitter_start);
  CHECK(m.jitter <= cfg.pd_jitter_cap);
  const Matrix a = cov.matrix + m.jitter * Matrix::Identity(12, 12);
  CHECK((a * m.inverse - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() <= kInverseResidualTolerance);

  Matrix neg = -Matrix::Identity(3, 3);
  try {
    backward_map(cov_of(neg), 0.0, cfg);
    FAIL("expected SingularAfterJitter");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularAfterJitter);
  }
}

TEST_CASE("maps per population honour per-population nu") {
  std::mt19937_64 rng(4);
  std::vector<SampleCovariance> covs;
  for (int k = 0; k < 3; ++k) covs.push_back(sample_covariance(testing::random_expression(6, 60, rng), true));
  SolverConfig cfg;
  cfg.nu_per_population = {0.0, 0.1, 0.2};
  cfg.threads = 3;
  const auto maps = backward_maps(covs, cfg);
  REQUIRE(maps.population_count() == 3);
  for (int k = 0; k < 3; ++k) {
    const auto single = backward_map(covs[k], cfg.nu_for(k), cfg);
    CHECK(maps.maps[k] == single.inverse);
  }
}
