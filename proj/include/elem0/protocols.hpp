#pragma once

#include "elem0/evalkit.hpp"
#include "elem0/selection.hpp"
#include "elem0/synth.hpp"

#include <vector>

namespace elem0 {

// Grid used by the synthetic benchmarks unless a config supplies one.
ParameterGrid default_grid();

struct TrialResult {
  std::uint64_t seed = 0;
  Metrics metrics;  // macro average over populations
  ScoreRow selected;
  double seconds = 0.0;  // selection and final fit, data generation excluded
};

// One synthetic instance: generate, select by eBIC, score against truth.
TrialResult run_standard_trial(const SynthSpec& spec, const ParameterGrid& grid, const SolverConfig& base = {});

struct CategoricalTrialResult {
  std::uint64_t seed = 0;
  Metrics categorical;  // on the K*C total networks
  Metrics standard;     // standard model fitted per category, same networks
  ScoreRow categorical_selected;
  double categorical_seconds = 0.0;
  double standard_seconds = 0.0;
};

// Categorical instance (spec.categories > 0), fitted both jointly and with
// the standard model run independently for each category.
CategoricalTrialResult run_categorical_trial(const SynthSpec& spec, const ParameterGrid& grid,
                                             const SolverConfig& base = {});

Metrics mean_metrics(const std::vector<Metrics>& runs);

}  // namespace elem0
