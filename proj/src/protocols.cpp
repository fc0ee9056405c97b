#include "elem0/protocols.hpp"

#include "elem0/categorical.hpp"

#include <chrono>

namespace elem0 {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

ParameterGrid default_grid() {
  return {{0.1, 1.0}, {0.005, 0.01, 0.02, 0.05, 0.1, 0.2}, {0.0, 0.02, 0.05, 0.1}};
}

TrialResult run_standard_trial(const SynthSpec& spec, const ParameterGrid& grid, const SolverConfig& base) {
  const auto truth = generate(spec);
  const auto t0 = Clock::now();
  const auto sel = select_parameters(truth.data, truth.tree, grid, base);
  TrialResult out;
  out.seconds = seconds_since(t0);
  out.seed = spec.seed;
  out.selected = sel.best;
  out.metrics = score(truth.precision, sel.model.networks).macro;
  return out;
}

CategoricalTrialResult run_categorical_trial(const SynthSpec& spec, const ParameterGrid& grid,
                                             const SolverConfig& base) {
  if (spec.categories < 1) throw Error(ErrorKind::InvalidArgument, "categorical trial needs categories >= 1");
  const auto truth = generate_categorical(spec);
  const int K = spec.populations;
  const int C = spec.categories;
  std::vector<SparseSymmetric> target;
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) target.push_back(truth.cell_precision[k][c]);
  }

  CategoricalTrialResult out;
  out.seed = spec.seed;
  auto t0 = Clock::now();
  const auto cat = select_categorical_parameters(truth.cell_data, truth.tree, grid, base);
  out.categorical_seconds = seconds_since(t0);
  out.categorical_selected = cat.best;
  std::vector<SparseSymmetric> joint;
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) joint.push_back(cat.model.total(k, c));
  }
  out.categorical = score(target, joint).macro;

  t0 = Clock::now();
  std::vector<SparseSymmetric> separate(static_cast<std::size_t>(K * C));
  for (int c = 0; c < C; ++c) {
    std::vector<ExpressionMatrix> column;
    for (int k = 0; k < K; ++k) column.push_back(truth.cell_data[k][c]);
    const auto sel = select_parameters(column, truth.tree, grid, base);
    for (int k = 0; k < K; ++k) separate[k * C + c] = sel.model.networks[k];
  }
  out.standard_seconds = seconds_since(t0);
  out.standard = score(target, separate).macro;
  return out;
}

Metrics mean_metrics(const std::vector<Metrics>& runs) {
  Metrics out;
  if (runs.empty()) return out;
  const double n = static_cast<double>(runs.size());
  for (const auto& m : runs) {
    out.precision += m.precision / n;
    out.recall += m.recall / n;
    out.f1 += m.f1 / n;
    out.rmse += m.rmse / n;
    out.true_positives += m.true_positives;
    out.false_positives += m.false_positives;
    out.false_negatives += m.false_negatives;
  }
  return out;
}

}  // namespace elem0
