#include "elem0/categorical.hpp"
#include "elem0/evalkit.hpp"
#include "elem0/inference.hpp"
#include "elem0/io.hpp"
#include "elem0/parallel.hpp"
#include "elem0/protocols.hpp"
#include "elem0/selection.hpp"
#include "elem0/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

using namespace elem0;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

struct SolverFlags {
  std::optional<double> lambda;
  std::optional<double> gamma;
  std::optional<double> nu;
  std::optional<double> alpha;
  bool no_center = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--lambda", f.lambda, "l0 penalty weight");
  cmd->add_option("--gamma", f.gamma, "tree similarity weight");
  cmd->add_option("--nu", f.nu, "soft-threshold level");
  cmd->add_option("--alpha", f.alpha, "ridge weight (categorical)");
  cmd->add_flag("--no-center", f.no_center, "do not center genes before the covariance");
}

// Config document with command-line values written over it.
json effective_config(const Globals& g, const SolverFlags& f) {
  json doc = g.config.empty() ? json::object() : read_json(g.config);
  if (doc.contains("config")) doc = doc["config"];
  SolverConfig cfg = config_from_json(doc);
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.gamma) cfg.gamma = *f.gamma;
  if (f.nu) cfg.nu = *f.nu;
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.no_center) cfg.center_data = false;
  if (g.threads) cfg.threads = *g.threads == 0 ? default_thread_count() : *g.threads;
  cfg.validate();
  doc["solver"] = to_json(cfg);
  if (g.seed) doc["seed"] = *g.seed;
  return doc;
}

ParameterGrid grid_from(const json& doc) {
  ParameterGrid grid = default_grid();
  if (doc.contains("grid")) {
    const auto& j = doc["grid"];
    try {
      if (j.contains("gamma")) grid.gamma = j["gamma"].get<std::vector<double>>();
      if (j.contains("lambda")) grid.lambda = j["lambda"].get<std::vector<double>>();
      if (j.contains("nu")) grid.nu = j["nu"].get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, std::string("grid: ") + e.what());
    }
  }
  grid.validate();
  return grid;
}

json grid_json(const ParameterGrid& g) { return {{"gamma", g.gamma}, {"lambda", g.lambda}, {"nu", g.nu}}; }

json run_document(const std::string& command, const json& config) {
  return {{"command", command}, {"version", ELEM0_VERSION}, {"config", config}};
}

void write_scores(const fs::path& file, const std::vector<ScoreRow>& table) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << "gamma\tlambda\tnu\tebic\tdf_total\n";
  for (const auto& r : table) {
    out << format_double(r.gamma) << '\t' << format_double(r.lambda) << '\t' << format_double(r.nu) << '\t'
        << (r.ebic < kInfeasibleScore ? format_double(r.ebic) : std::string("inf")) << '\t' << r.df_total << '\n';
  }
}

json metrics_json(const Metrics& m) {
  return {{"F1", m.f1},
          {"Precision", m.precision},
          {"Recall", m.recall},
          {"tp", m.true_positives},
          {"fp", m.false_positives},
          {"fn", m.false_negatives},
          {"rmse", m.rmse}};
}

std::vector<ExpressionMatrix> load_data(const std::string& dir) { return read_population_dir(dir); }

int cmd_infer(const Globals& g, const SolverFlags& f, const std::string& data_dir, const std::string& tree_file) {
  const auto t0 = std::chrono::steady_clock::now();
  auto doc = effective_config(g, f);
  const auto cfg = config_from_json(doc);
  const auto data = load_data(data_dir);
  const auto tree = read_tree(tree_file, static_cast<int>(data.size()));
  auto result = elem0_infer(data, tree, cfg);
  write_networks(g.out, result.genes, result.networks);
  auto run = run_document("infer", doc);
  run["inputs"] = {{"data", data_dir}, {"tree", tree_file}};
  run["metadata"] = to_json(result.metadata);
  run["edges"] = result.total_edges();
  run["wall_s"] = seconds_since(t0);
  write_json(fs::path(g.out) / "run.json", run);
  for (std::size_t k = 0; k < result.metadata.positive_definite.size(); ++k) {
    if (!result.metadata.positive_definite[k]) {
      std::cerr << "warning: estimate for population " << k + 1 << " is not positive definite\n";
    }
  }
  return 0;
}

int cmd_infer_categorical(const Globals& g, const SolverFlags& f, const std::string& data_dir,
                          const std::string& tree_file) {
  const auto t0 = std::chrono::steady_clock::now();
  auto doc = effective_config(g, f);
  CategoricalProblem problem;
  problem.cfg = config_from_json(doc);
  problem.data = read_categorical_dir(data_dir);
  problem.tree = read_tree(tree_file, static_cast<int>(problem.data.size()));
  auto result = categorical_infer(problem);
  write_categorical(g.out, result);
  auto run = run_document("infer-categorical", doc);
  run["inputs"] = {{"data", data_dir}, {"tree", tree_file}};
  run["metadata"] = to_json(result.metadata);
  run["categories"] = result.categories;
  run["wall_s"] = seconds_since(t0);
  write_json(fs::path(g.out) / "run.json", run);
  return 0;
}

int cmd_select(const Globals& g, const SolverFlags& f, const std::string& data_dir, const std::string& tree_file) {
  const auto t0 = std::chrono::steady_clock::now();
  auto doc = effective_config(g, f);
  const auto cfg = config_from_json(doc);
  const auto grid = grid_from(doc);
  doc["grid"] = grid_json(grid);
  const auto data = load_data(data_dir);
  const auto tree = read_tree(tree_file, static_cast<int>(data.size()));
  const auto sel = select_parameters(data, tree, grid, cfg);
  write_networks(g.out, sel.model.genes, sel.model.networks);
  write_scores(fs::path(g.out) / "scores.tsv", sel.table);
  auto run = run_document("select", doc);
  run["inputs"] = {{"data", data_dir}, {"tree", tree_file}};
  run["selected"] = {{"gamma", sel.best.gamma}, {"lambda", sel.best.lambda}, {"nu", sel.best.nu}};
  run["ebic"] = sel.best.ebic;
  run["metadata"] = to_json(sel.model.metadata);
  run["wall_s"] = seconds_since(t0);
  write_json(fs::path(g.out) / "run.json", run);
  return 0;
}

SynthSpec synth_spec_from(const json& doc) {
  SynthSpec s;
  if (!doc.contains("synth")) return s;
  const auto& j = doc["synth"];
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("p", s.p);
    get("populations", s.populations);
    get("n_over_p", s.n_over_p);
    get("modules", s.modules);
    get("ba_edges", s.ba_edges);
    get("perturb_modules", s.perturb_modules);
    get("weight_low", s.weight_low);
    get("weight_high", s.weight_high);
    get("pd_margin", s.pd_margin);
    get("seed", s.seed);
    get("categories", s.categories);
    get("local_edge_ratio", s.local_edge_ratio);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("synth: ") + e.what());
  }
  return s;
}

json synth_json(const SynthSpec& s) {
  return {{"p", s.p},
          {"populations", s.populations},
          {"n_over_p", s.n_over_p},
          {"modules", s.modules},
          {"ba_edges", s.ba_edges},
          {"perturb_modules", s.perturb_modules},
          {"weight_low", s.weight_low},
          {"weight_high", s.weight_high},
          {"pd_margin", s.pd_margin},
          {"seed", s.seed},
          {"categories", s.categories},
          {"local_edge_ratio", s.local_edge_ratio},
          {"samples", s.samples()}};
}

struct SynthFlags {
  std::optional<int> p;
  std::optional<int> k;
  std::optional<double> np;
  std::optional<int> categories;
  std::optional<double> delta;
};

int cmd_synth(const Globals& g, const SynthFlags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  json doc = g.config.empty() ? json::object() : read_json(g.config);
  if (doc.contains("config")) doc = doc["config"];
  auto spec = synth_spec_from(doc);
  if (f.p) spec.p = *f.p;
  if (f.k) spec.populations = *f.k;
  if (f.np) spec.n_over_p = *f.np;
  if (f.categories) spec.categories = *f.categories;
  if (f.delta) spec.local_edge_ratio = *f.delta;
  if (g.seed) spec.seed = *g.seed;
  spec.validate();
  doc["synth"] = synth_json(spec);

  const fs::path out(g.out);
  const auto truth = generate(spec);
  write_tree(out / "tree.tsv", truth.tree);
  if (spec.categories > 0) {
    std::vector<SparseSymmetric> flat;
    for (int k = 0; k < spec.populations; ++k) {
      const auto pk = "pop_" + std::to_string(k + 1);
      write_network_file(out / ("truth_" + pk + ".global.tsv"), truth.genes, truth.precision[k]);
      for (int c = 0; c < spec.categories; ++c) {
        const auto cell = pk + "_cat_" + std::to_string(c + 1);
        write_expression(out / "data" / (cell + ".tsv"), truth.cell_data[k][c]);
        write_network_file(out / ("truth_" + cell + ".tsv"), truth.genes, truth.cell_precision[k][c]);
        flat.push_back(truth.cell_precision[k][c]);
      }
    }
    write_networks(out / "truth", truth.genes, flat);
  } else {
    for (int k = 0; k < spec.populations; ++k) {
      const auto pk = "pop_" + std::to_string(k + 1);
      write_expression(out / "data" / (pk + ".tsv"), truth.data[k]);
      write_network_file(out / ("truth_" + pk + ".tsv"), truth.genes, truth.precision[k]);
    }
    write_networks(out / "truth", truth.genes, truth.precision);
  }
  auto run = run_document("synth", doc);
  run["wall_s"] = seconds_since(t0);
  write_json(out / "run.json", run);
  return 0;
}

int cmd_eval(const Globals& g, const std::string& truth_dir, const std::string& estimate_dir) {
  const auto truth = read_networks(truth_dir);
  const auto est = read_networks(estimate_dir);
  if (truth.genes != est.genes) {
    throw Error(ErrorKind::MismatchedGeneSets, "truth and estimate list different genes");
  }
  const auto report = score(truth, est);
  const fs::path out(g.out);
  fs::create_directories(out);
  std::ofstream tsv(out / "metrics.tsv");
  if (!tsv) throw Error(ErrorKind::Io, "cannot write metrics.tsv");
  tsv << "population\tF1\tprecision\trecall\ttp\tfp\tfn\trmse\n";
  auto row = [&](const std::string& name, const Metrics& m) {
    tsv << name << '\t' << format_double(m.f1) << '\t' << format_double(m.precision) << '\t'
        << format_double(m.recall) << '\t' << m.true_positives << '\t' << m.false_positives << '\t'
        << m.false_negatives << '\t' << format_double(m.rmse) << '\n';
  };
  for (std::size_t k = 0; k < report.populations.size(); ++k) row(std::to_string(k + 1), report.populations[k]);
  row("macro", report.macro);

  json summary = metrics_json(report.macro);
  const auto est_run = fs::path(estimate_dir) / "run.json";
  if (fs::exists(est_run)) {
    const auto r = read_json(est_run);
    if (r.contains("wall_s")) summary["Time (s)"] = r["wall_s"];
  }
  write_json(out / "summary.json", summary);
  auto run = run_document("eval", json::object());
  run["inputs"] = {{"truth", truth_dir}, {"estimate", estimate_dir}};
  run["summary"] = summary;
  write_json(out / "run.json", run);
  return 0;
}

int cmd_mst(const Globals& g, const std::string& distances) {
  const auto tree = mst_from_distances(read_matrix(distances));
  const fs::path out(g.out);
  write_tree(out / "tree.tsv", tree);
  auto run = run_document("mst", json::object());
  run["inputs"] = {{"distances", distances}};
  run["edges"] = tree.edges().size();
  write_json(out / "run.json", run);
  return 0;
}

struct ReproFlags {
  std::string protocol = "all";
  int seeds = 5;
  std::optional<int> p;
  std::optional<int> k;
  std::optional<double> np;
};

int cmd_repro(const Globals& g, const ReproFlags& f) {
  json doc = g.config.empty() ? json::object() : read_json(g.config);
  if (doc.contains("config")) doc = doc["config"];
  SolverConfig base = config_from_json(doc);
  if (g.threads) base.threads = *g.threads == 0 ? default_thread_count() : *g.threads;
  const auto grid = grid_from(doc);
  doc["grid"] = grid_json(grid);
  doc["solver"] = to_json(base);
  const std::uint64_t first_seed = g.seed.value_or(1);
  const fs::path out(g.out);
  fs::create_directories(out);
  auto run = run_document("repro-table1", doc);
  auto want = [&](const char* name) { return f.protocol == "all" || f.protocol == name; };
  if (!want("table1") && !want("fig3") && !want("fig5")) {
    throw Error(ErrorKind::InvalidArgument, "unknown protocol '" + f.protocol + "'");
  }

  auto standard_rows = [&](const std::string& file, const std::vector<double>& ratios, SynthSpec spec) {
    std::ofstream tsv(out / file);
    tsv << "n_over_p\tseed\tF1\tprecision\trecall\tgamma\tlambda\tnu\ttime_s\n";
    json summary = json::array();
    for (double np : ratios) {
      spec.n_over_p = np;
      std::vector<Metrics> runs;
      double time = 0.0;
      for (int s = 0; s < f.seeds; ++s) {
        spec.seed = first_seed + static_cast<std::uint64_t>(s);
        const auto r = run_standard_trial(spec, grid, base);
        runs.push_back(r.metrics);
        time += r.seconds / f.seeds;
        tsv << np << '\t' << spec.seed << '\t' << r.metrics.f1 << '\t' << r.metrics.precision << '\t'
            << r.metrics.recall << '\t' << r.selected.gamma << '\t' << r.selected.lambda << '\t' << r.selected.nu
            << '\t' << r.seconds << '\n';
        std::cerr << file << " n/p=" << np << " seed=" << spec.seed << " F1=" << r.metrics.f1 << '\n';
      }
      auto m = metrics_json(mean_metrics(runs));
      m["n_over_p"] = np;
      m["Time (s)"] = time;
      summary.push_back(m);
    }
    return summary;
  };

  if (want("table1")) {
    SynthSpec spec;
    spec.p = f.p.value_or(250);
    spec.populations = f.k.value_or(10);
    run["table1"] = standard_rows("table1.tsv", {f.np.value_or(20.0)}, spec);
  }
  if (want("fig3")) {
    SynthSpec spec;
    spec.p = f.p.value_or(100);
    spec.populations = f.k.value_or(10);
    run["fig3"] = standard_rows("fig3.tsv", {1.0, 5.0, 10.0, 20.0}, spec);
  }
  if (want("fig5")) {
    SynthSpec spec;
    spec.p = f.p.value_or(100);
    spec.populations = f.k.value_or(5);
    spec.n_over_p = f.np.value_or(20.0);
    spec.categories = 2;
    std::ofstream tsv(out / "fig5.tsv");
    tsv << "delta\tseed\tF1_categorical\tF1_standard\tprecision_categorical\tprecision_standard\trecall_categorical\t"
           "recall_standard\n";
    json summary = json::array();
    for (double delta : {0.1, 0.3, 0.5}) {
      spec.local_edge_ratio = delta;
      std::vector<Metrics> cat, std_runs;
      for (int s = 0; s < f.seeds; ++s) {
        spec.seed = first_seed + static_cast<std::uint64_t>(s);
        const auto r = run_categorical_trial(spec, grid, base);
        cat.push_back(r.categorical);
        std_runs.push_back(r.standard);
        tsv << delta << '\t' << spec.seed << '\t' << r.categorical.f1 << '\t' << r.standard.f1 << '\t'
            << r.categorical.precision << '\t' << r.standard.precision << '\t' << r.categorical.recall << '\t'
            << r.standard.recall << '\n';
        std::cerr << "fig5 delta=" << delta << " seed=" << spec.seed << " categorical F1=" << r.categorical.f1
                  << " standard F1=" << r.standard.f1 << '\n';
      }
      summary.push_back({{"delta", delta},
                         {"categorical", metrics_json(mean_metrics(cat))},
                         {"standard", metrics_json(mean_metrics(std_runs))}});
    }
    run["fig5"] = summary;
  }
  write_json(out / "run.json", run);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint l0 inference of tree-coupled gene networks"};
  app.set_version_flag("--version", std::string(ELEM0_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON config (solver, grid, synth sections)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0: all cores)");
  app.add_option("--seed", g.seed, "random seed");

  SolverFlags solver;
  std::string data_dir, tree_file;

  auto* infer = app.add_subcommand("infer", "fit the standard model");
  infer->add_option("--data", data_dir, "directory with pop_<k>.tsv")->required();
  infer->add_option("--tree", tree_file, "hypergraph TSV (src dst weight)")->required();
  add_solver_flags(infer, solver);

  auto* infer_cat = app.add_subcommand("infer-categorical", "fit the global + local model");
  infer_cat->add_option("--data", data_dir, "directory with pop_<k>_cat_<c>.tsv")->required();
  infer_cat->add_option("--tree", tree_file, "hypergraph TSV (src dst weight)")->required();
  add_solver_flags(infer_cat, solver);

  auto* select = app.add_subcommand("select", "eBIC grid search");
  select->add_option("--data", data_dir, "directory with pop_<k>.tsv")->required();
  select->add_option("--tree", tree_file, "hypergraph TSV (src dst weight)")->required();
  add_solver_flags(select, solver);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark instance");
  synth->add_option("--p", synth_flags.p, "genes");
  synth->add_option("--k", synth_flags.k, "populations");
  synth->add_option("--np", synth_flags.np, "samples per gene");
  synth->add_option("--categories", synth_flags.categories, "categories (0: standard)");
  synth->add_option("--delta", synth_flags.delta, "local edge ratio");

  std::string truth_dir, estimate_dir;
  auto* eval = app.add_subcommand("eval", "score an estimate against ground truth");
  eval->add_option("--truth", truth_dir, "network directory")->required();
  eval->add_option("--estimate", estimate_dir, "network directory")->required();

  std::string distances;
  auto* mst = app.add_subcommand("mst", "hypergraph from a distance matrix");
  mst->add_option("--distances", distances, "square whitespace-separated matrix")->required();

  ReproFlags repro_flags;
  auto* repro = app.add_subcommand("repro-table1", "run the synthetic benchmark protocols");
  repro->add_option("--protocol", repro_flags.protocol, "table1, fig3, fig5 or all");
  repro->add_option("--seeds", repro_flags.seeds, "trials per setting")->check(CLI::PositiveNumber);
  repro->add_option("--p", repro_flags.p, "genes");
  repro->add_option("--k", repro_flags.k, "populations");
  repro->add_option("--np", repro_flags.np, "samples per gene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*infer) return cmd_infer(g, solver, data_dir, tree_file);
    if (*infer_cat) return cmd_infer_categorical(g, solver, data_dir, tree_file);
    if (*select) return cmd_select(g, solver, data_dir, tree_file);
    if (*synth) return cmd_synth(g, synth_flags);
    if (*eval) return cmd_eval(g, truth_dir, estimate_dir);
    if (*mst) return cmd_mst(g, distances);
    if (*repro) return cmd_repro(g, repro_flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
