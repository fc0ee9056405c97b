// Acceptance suite: one PASS/FAIL line per criterion. Run everything, or a
// single criterion with --only <name>.

#include "elem0/categorical.hpp"
#include "elem0/covmap.hpp"
#include "elem0/inference.hpp"
#include "elem0/io.hpp"
#include "elem0/parallel.hpp"
#include "elem0/protocols.hpp"
#include "elem0/treesolve.hpp"
#include "support.hpp"

#include <CLI11.hpp>
#include <sys/resource.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

using namespace elem0;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  enum Status { Pass, Fail, Skip } status;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int threads() { return default_thread_count(); }

Outcome kernel_oracle() {
  std::mt19937_64 rng(20240501);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U;
  const double grid[] = {0.01, 0.1, 1.0, 10.0};
  double worst = 0.0;
  int bad = 0;
  double dp_time = 0.0;
  const auto t0 = Clock::now();
  for (int it = 0; it < 500; ++it) {
    const int K = 1 + it % 12;
    ScalarTreeProblem p{Vector(K), grid[rng() % 4], grid[rng() % 4], testing::random_tree(K, rng), 0.0, {}};
    for (auto& f : p.targets) f = N(rng);
    if (it % 3 == 1) p.ridge = grid[rng() % 4];
    if (it % 4 == 2) {
      p.exempt.assign(K, false);
      for (int k = 0; k < K; ++k) p.exempt[k] = U(rng) < 0.3;
    }
    const auto t1 = Clock::now();
    const auto dp = solve_offdiag_l0(p);
    dp_time += since(t1);
    const auto bf = brute_force_offdiag(p);
    const double err = std::abs(dp.objective - bf.objective) / (1.0 + std::abs(bf.objective));
    worst = std::max(worst, err);
    bad += err > 1e-8;
  }
  const double total = since(t0);
  const bool ok = bad == 0 && total < 30.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          fmt("500 instances, %d mismatches, worst rel err %.2e, %.2f s total (%.3f s in the DP)", bad, worst, total,
              dp_time)};
}

Outcome categorical_oracle() {
  std::mt19937_64 rng(20240502);
  std::normal_distribution<double> N;
  const double grid[] = {0.01, 0.1, 1.0, 10.0};
  double worst = 0.0;
  int bad = 0;
  const auto t0 = Clock::now();
  for (int it = 0; it < 200; ++it) {
    CategoricalCoordinate c;
    const int K = 1 + static_cast<int>(rng() % 3);
    const int C = 1 + static_cast<int>(rng() % 3);
    c.targets.resize(K, C);
    for (auto& v : c.targets.reshaped()) v = N(rng);
    c.lambda = grid[rng() % 4];
    c.gamma = grid[rng() % 4];
    c.alpha = (it % 2) ? 0.01 : grid[rng() % 4];
    c.tree = testing::random_tree(K, rng);
    const auto dp = solve_categorical_coordinate(c);
    const auto bf = brute_force_categorical(c);
    const double err = std::abs(dp.objective - bf.objective) / (1.0 + std::abs(bf.objective));
    worst = std::max(worst, err);
    bad += err > 1e-8;
  }
  return {bad == 0 ? Outcome::Pass : Outcome::Fail,
          fmt("200 instances, %d mismatches, worst rel err %.2e, %.2f s", bad, worst, since(t0))};
}

SolverConfig base_config() {
  SolverConfig cfg;
  cfg.threads = threads();
  return cfg;
}

Outcome table1() {
  SynthSpec spec;
  spec.p = 250;
  spec.populations = 10;
  spec.n_over_p = 20;
  std::vector<Metrics> runs;
  double slowest = 0.0;
  std::ostringstream seeds;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    spec.seed = seed;
    const auto r = run_standard_trial(spec, default_grid(), base_config());
    runs.push_back(r.metrics);
    slowest = std::max(slowest, r.seconds);
    seeds << fmt(" %.3f", r.metrics.f1);
  }
  const auto m = mean_metrics(runs);
  const bool ok = m.f1 >= 0.8 && m.precision >= 0.8 && m.recall >= 0.8 && slowest <= 300.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          fmt("mean F1 %.3f P %.3f R %.3f, slowest run %.1f s; per-seed F1", m.f1, m.precision, m.recall, slowest) +
              seeds.str()};
}

Outcome fig3() {
  SynthSpec spec;
  spec.p = 100;
  spec.populations = 10;
  std::map<double, double> f1;
  for (double np : {1.0, 5.0, 10.0, 20.0}) {
    spec.n_over_p = np;
    std::vector<Metrics> runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      spec.seed = seed;
      runs.push_back(run_standard_trial(spec, default_grid(), base_config()).metrics);
    }
    f1[np] = mean_metrics(runs).f1;
  }
  const bool trend = f1[20.0] - f1[1.0] >= 0.2;
  const bool floor = f1[5.0] >= 0.75 && f1[10.0] >= 0.75 && f1[20.0] >= 0.75;
  return {trend && floor ? Outcome::Pass : Outcome::Fail,
          fmt("mean F1 at n/p=1: %.3f, 5: %.3f, 10: %.3f, 20: %.3f", f1[1.0], f1[5.0], f1[10.0], f1[20.0])};
}

Outcome fig5() {
  SynthSpec spec;
  spec.p = 100;
  spec.populations = 5;
  spec.n_over_p = 20;
  spec.categories = 2;
  std::map<double, std::pair<double, double>> f1;
  for (double delta : {0.1, 0.5}) {
    spec.local_edge_ratio = delta;
    std::vector<Metrics> cat, standard;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      spec.seed = seed;
      const auto r = run_categorical_trial(spec, default_grid(), base_config());
      cat.push_back(r.categorical);
      standard.push_back(r.standard);
    }
    f1[delta] = {mean_metrics(cat).f1, mean_metrics(standard).f1};
  }
  const bool advantage = f1[0.5].first >= f1[0.5].second;
  const bool comparable = std::abs(f1[0.1].first - f1[0.1].second) <= 0.05;
  return {advantage && comparable ? Outcome::Pass : Outcome::Fail,
          fmt("delta=50%%: categorical %.4f vs standard %.4f; delta=10%%: categorical %.4f vs standard %.4f",
              f1[0.5].first, f1[0.5].second, f1[0.1].first, f1[0.1].second)};
}

Outcome scaling() {
  std::mt19937_64 rng(20240503);
  const int p = 30;
  const int n = 150;
  SolverConfig cfg;
  cfg.lambda = 0.02;
  cfg.gamma = 0.5;
  cfg.nu = 0.05;
  cfg.threads = 1;
  std::vector<double> lx, ly;
  std::ostringstream detail;
  for (int K : {10, 20, 40, 80, 160}) {
    std::vector<ExpressionMatrix> data;
    for (int k = 0; k < K; ++k) data.push_back(testing::random_expression(p, n, rng));
    const auto tree = testing::path_tree(K);
    const auto maps = backward_maps(sample_covariances(data, true, 1), cfg);
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) best = std::min(best, elem0_solve(maps, tree, cfg).metadata.timings.solve_s);
    lx.push_back(std::log(K));
    ly.push_back(std::log(best));
    detail << fmt(" K=%d:%.4fs", K, best);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope <= 2.3 ? Outcome::Pass : Outcome::Fail, fmt("log-log slope %.2f;", slope) + detail.str()};
}

Outcome limits() {
  std::mt19937_64 rng(20240504);
  std::vector<std::string> broken;
  const int p = 12, K = 6;
  const auto tree = testing::random_tree(K, rng);
  std::vector<ExpressionMatrix> data;
  for (int k = 0; k < K; ++k) data.push_back(testing::random_expression(p, 60, rng));
  SolverConfig cfg;
  cfg.nu = 0.05;
  const auto maps = backward_maps(sample_covariances(data, true, 1), cfg);

  // lambda = gamma = 0: the estimate is the backward map
  auto est = elem0_solve(maps, tree, cfg);
  for (int k = 0; k < K; ++k)
    if ((est.networks[k].to_dense() - maps.maps[k]).cwiseAbs().maxCoeff() > 1e-10) broken.push_back("identity");

  // gamma = 0: hard threshold of each entry at sqrt(lambda)
  cfg.lambda = 0.01;
  est = elem0_solve(maps, tree, cfg);
  for (int k = 0; k < K; ++k) {
    const Matrix got = est.networks[k].to_dense();
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double f = maps.maps[k](i, j);
        const double want = (i == j || f * f > cfg.lambda) ? f : 0.0;
        if (got(i, j) != want) broken.push_back("hard-threshold");
      }
  }

  // gamma = 1e8: every entry agrees across populations
  cfg.gamma = 1e8;
  est = elem0_solve(maps, tree, cfg);
  double spread = 0.0;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int k = 0; k < K; ++k) {
        const double v = est.networks[k].to_dense()(i, j);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      spread = std::max(spread, hi - lo);
    }
  if (spread > 1e-3) broken.push_back("consensus");

  // symmetry and schedule invariance
  cfg.gamma = 0.5;
  cfg.lambda = 0.02;
  const auto one = elem0_solve(maps, tree, cfg);
  for (const auto& net : one.networks) {
    const Matrix d = net.to_dense();
    if (d != d.transpose()) broken.push_back("symmetry");
  }
  for (int w : {2, 4, 7}) {
    cfg.threads = w;
    const auto many = elem0_solve(maps, tree, cfg);
    for (int k = 0; k < K; ++k)
      if (many.networks[k].edges != one.networks[k].edges || many.networks[k].diagonal != one.networks[k].diagonal)
        broken.push_back("schedule");
  }

  std::sort(broken.begin(), broken.end());
  broken.erase(std::unique(broken.begin(), broken.end()), broken.end());
  std::string detail = fmt("consensus spread %.2e", spread);
  for (const auto& b : broken) detail += "; violated: " + b;
  return {broken.empty() ? Outcome::Pass : Outcome::Fail, detail};
}

Outcome full_scale() {
  const char* flag = std::getenv("ELEM0_FULL_SCALE");
  if (!flag || std::string(flag) != "1") return {Outcome::Skip, "set ELEM0_FULL_SCALE=1 to run (p=2000, K=20, n/p=5)"};
  SynthSpec spec;
  spec.p = 2000;
  spec.populations = 20;
  spec.modules = 100;
  spec.n_over_p = 5;
  spec.seed = 1;
  const auto t0 = Clock::now();
  const auto truth = generate(spec);
  SolverConfig cfg = base_config();
  cfg.lambda = 0.02;
  cfg.gamma = 0.5;
  cfg.nu = 0.05;
  const auto est = elem0_infer(truth.data, truth.tree, cfg);
  const auto out = fs::temp_directory_path() / "elem0_full_scale";
  write_networks(out, est.genes, est.networks);
  const auto back = read_networks(out);
  fs::remove_all(out);
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double peak_gb = usage.ru_maxrss / 1024.0 / 1024.0;
  const bool ok = back.networks.size() == 20 && peak_gb <= 8.0;
  return {ok ? Outcome::Pass : Outcome::Fail,
          fmt("%.0f s, peak RSS %.2f GB (ceiling 8 GB), %zu edges, macro F1 %.3f", since(t0), peak_gb,
              est.total_edges(), score(truth.precision, est.networks).macro.f1)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"kernel_oracle", kernel_oracle}, {"categorical_oracle", categorical_oracle},
      {"table1", table1},               {"fig3_trend", fig3},
      {"fig5_categorical", fig5},       {"scaling", scaling},
      {"limit_invariants", limits},     {"full_scale_smoke", full_scale},
  };

  CLI::App app{"acceptance criteria"};
  std::string only;
  app.add_option("--only", only, "run a single criterion");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  int ran = 0;
  bool found = false;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && only != name) continue;
    found = true;
    Outcome o{Outcome::Fail, ""};
    const auto t0 = Clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
    std::printf("%s %s (%.1f s): %s\n", tag, name.c_str(), since(t0), o.detail.c_str());
    std::fflush(stdout);
    failed += o.status == Outcome::Fail;
    ran += o.status != Outcome::Skip;
  }
  if (!found) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  if (failed > 0) return 1;
  return ran == 0 ? 77 : 0;  // 77: everything skipped
}
