#include <doctest.h>

#include "elem0/io.hpp"
#include "support.hpp"

#include <fstream>

using namespace elem0;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("elem0_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  out << text;
}

}  // namespace

TEST_CASE("doubles survive text") {
  std::mt19937_64 rng(81);
  std::normal_distribution<double> N;
  for (int it = 0; it < 1000; ++it) {
    const double v = N(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  for (double v : {0.0, -0.0, 1e-300, 5e-324, 1.7976931348623157e308}) CHECK(parse_double(format_double(v)) == v);
  CHECK_THROWS_AS(parse_double("1.5x"), Error);
}

TEST_CASE("network directories round trip bit for bit") {
  TempDir tmp;
  std::mt19937_64 rng(83);
  std::normal_distribution<double> N;
  std::vector<std::string> genes = {"TP53", "MYC", "gene-3", "ENSG0001"};
  std::vector<SparseSymmetric> nets;
  for (int k = 0; k < 3; ++k) {
    Matrix m = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) {
      m(i, i) = std::abs(N(rng)) + 1.0 / 3.0;
      for (int j = i + 1; j < 4; ++j)
        if (rng() % 2) m(i, j) = m(j, i) = N(rng) / 7.0;
    }
    nets.push_back(SparseSymmetric::from_dense(m));
  }
  write_networks(tmp.path / "net", genes, nets);
  const auto back = read_networks(tmp.path / "net");
  CHECK(back.genes == genes);
  REQUIRE(back.networks.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(back.networks[k].diagonal == nets[k].diagonal);
    CHECK(back.networks[k].edges == nets[k].edges);
  }
}

TEST_CASE("expression files") {
  TempDir tmp;
  std::mt19937_64 rng(85);
  auto x = testing::random_expression(5, 7, rng);
  write_expression(tmp.path / "data" / "pop_1.tsv", x);
  write_expression(tmp.path / "data" / "pop_2.tsv", x);
  const auto back = read_population_dir(tmp.path / "data");
  REQUIRE(back.size() == 2);
  CHECK(back[0].genes == x.genes);
  CHECK(back[0].samples == x.samples);
  CHECK(back[0].values == x.values);

  write_text(tmp.path / "ragged.tsv", "gene\ts1\ts2\ng1\t1\t2\ng2\t3\n");
  CHECK_THROWS_AS(read_expression(tmp.path / "ragged.tsv"), Error);
  write_text(tmp.path / "nan.tsv", "gene\ts1\ng1\tnan\n");
  CHECK_THROWS_AS(read_expression(tmp.path / "nan.tsv"), Error);
  CHECK_THROWS_AS(read_population_dir(tmp.path / "missing"), Error);

  write_expression(tmp.path / "cat" / "pop_1_cat_1.tsv", x);
  write_expression(tmp.path / "cat" / "pop_1_cat_2.tsv", x);
  write_expression(tmp.path / "cat" / "pop_2_cat_1.tsv", x);
  write_expression(tmp.path / "cat" / "pop_2_cat_2.tsv", x);
  const auto cells = read_categorical_dir(tmp.path / "cat");
  CHECK(cells.size() == 2);
  CHECK(cells[1].size() == 2);
}

TEST_CASE("tree files are one-based") {
  TempDir tmp;
  write_text(tmp.path / "tree.tsv", "src\tdst\tweight\n1\t2\t1\n1\t3\t0.5\n");
  const auto t = read_tree(tmp.path / "tree.tsv", 3);
  REQUIRE(t.edges().size() == 2);
  CHECK(t.edges()[0] == TreeEdge{0, 1, 1.0});
  CHECK(t.edges()[1] == TreeEdge{0, 2, 0.5});
  write_tree(tmp.path / "again.tsv", t);
  CHECK(read_tree(tmp.path / "again.tsv", 3).edges() == t.edges());

  write_text(tmp.path / "cycle.tsv", "src\tdst\tweight\n1\t2\t1\n2\t3\t1\n1\t3\t1\n");
  try {
    read_tree(tmp.path / "cycle.tsv", 3);
    FAIL("expected NotATree");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotATree);
  }
  write_text(tmp.path / "zero.tsv", "src\tdst\tweight\n0\t1\t1\n");
  CHECK_THROWS_AS(read_tree(tmp.path / "zero.tsv", 2), Error);
}

TEST_CASE("distance matrices") {
  TempDir tmp;
  write_text(tmp.path / "d.txt", "0 1 2\n1 0 3\n2 3 0\n");
  const Matrix d = read_matrix(tmp.path / "d.txt");
  CHECK(d.rows() == 3);
  CHECK(d(1, 2) == 3.0);
  write_text(tmp.path / "bad.txt", "0 1\n1\n");
  CHECK_THROWS_AS(read_matrix(tmp.path / "bad.txt"), Error);
}

TEST_CASE("solver config through json") {
  SolverConfig cfg;
  cfg.lambda = 0.1 / 3.0;
  cfg.gamma = 2.5;
  cfg.nu = 0.05;
  cfg.nu_per_population = {0.01, 0.02};
  cfg.alpha = 0.02;
  cfg.center_data = false;
  cfg.threads = 3;
  const auto j = to_json(cfg);
  for (const auto& doc : {j, nlohmann::json{{"solver", j}}, nlohmann::json{{"config", {{"solver", j}}}}}) {
    const auto back = config_from_json(doc);
    CHECK(back.lambda == cfg.lambda);
    CHECK(back.gamma == cfg.gamma);
    CHECK(back.nu_per_population == cfg.nu_per_population);
    CHECK(back.center_data == cfg.center_data);
    CHECK(back.threads == cfg.threads);
  }
  const auto partial = config_from_json(nlohmann::json{{"solver", {{"lambda", 0.5}}}});
  CHECK(partial.lambda == 0.5);
  CHECK(partial.alpha == SolverConfig{}.alpha);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"solver", {{"lambda", "big"}}}}), Error);
}
