#include "elem0/selection.hpp"

#include "elem0/categorical.hpp"
#include "elem0/inference.hpp"

#include <chrono>
#include <cmath>

namespace elem0 {

namespace {

void check_list(const std::vector<double>& values, const char* name, bool allow_zero) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, std::string("grid.") + name + " is empty");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
      throw Error(ErrorKind::InvalidArgument, std::string("grid.") + name + " values must be finite and " +
                                                  (allow_zero ? "non-negative" : "positive"));
    }
  }
}

std::size_t df_total(const std::vector<SparseSymmetric>& networks) {
  std::size_t df = 0;
  for (const auto& net : networks) df += net.edge_count();
  return df;
}

}  // namespace

void ParameterGrid::validate() const {
  check_list(gamma, "gamma", true);
  check_list(lambda, "lambda", true);
  check_list(nu, "nu", true);
}

double ebic_score(const std::vector<SparseSymmetric>& networks, const std::vector<SampleCovariance>& covs) {
  std::vector<double> df;
  for (const auto& net : networks) df.push_back(static_cast<double>(net.edge_count()));
  return ebic_score(networks, covs, df);
}

double ebic_score(const std::vector<SparseSymmetric>& networks, const std::vector<SampleCovariance>& covs,
                  const std::vector<double>& df) {
  if (networks.size() != covs.size() || networks.size() != df.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one covariance and one df per network is required");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < networks.size(); ++k) {
    const Matrix theta = networks[k].to_dense();
    const auto& s = covs[k].matrix;
    if (s.rows() != theta.rows()) throw Error(ErrorKind::ShapeMismatch, "covariance and network sizes differ");
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) return kInfeasibleScore;
    const Vector d = llt.matrixLLT().diagonal();
    if ((d.array() <= 0.0).any()) return kInfeasibleScore;
    const double logdet = 2.0 * d.array().log().sum();
    const double n = static_cast<double>(covs[k].samples);
    const double p = static_cast<double>(theta.rows());
    const double trace = (s.cwiseProduct(theta)).sum();
    total += n * (trace - logdet) + std::log(n) * df[k] + 4.0 * df[k] * std::log(p);
  }
  return total;
}

double ebic_score(const PrecisionSet& precision, const std::vector<SampleCovariance>& covs) {
  return ebic_score(precision.networks, covs);
}

bool tie_break_less(const ScoreRow& a, const ScoreRow& b) {
  if (a.lambda != b.lambda) return a.lambda > b.lambda;
  if (a.gamma != b.gamma) return a.gamma < b.gamma;
  return a.nu < b.nu;
}

std::size_t best_row(const std::vector<ScoreRow>& table) {
  std::size_t best = table.size();
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (!(table[r].ebic < kInfeasibleScore)) continue;
    if (best == table.size() || table[r].ebic < table[best].ebic ||
        (table[r].ebic == table[best].ebic && tie_break_less(table[r], table[best]))) {
      best = r;
    }
  }
  if (best == table.size()) {
    throw Error(ErrorKind::AllConfigurationsInfeasible, "no grid tuple produced positive definite estimates");
  }
  return best;
}

SelectionResult select_parameters(const std::vector<ExpressionMatrix>& data, const TreeHypergraph& tree,
                                  const ParameterGrid& grid, const SolverConfig& base) {
  grid.validate();
  base.validate();
  const auto ctx = validate_run_inputs(data, tree, base);
  const auto covs = sample_covariances(ctx.data, base.center_data, base.threads);

  SelectionResult out;
  std::size_t best = 0;
  bool have_best = false;
  for (double nu : grid.nu) {
    SolverConfig cfg = base;
    cfg.nu = nu;
    cfg.nu_per_population.clear();
    BackwardMapSet maps;
    bool feasible = true;
    try {
      maps = backward_maps(covs, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularAfterJitter) throw;
      feasible = false;
    }
    for (double gamma : grid.gamma) {
      for (double lambda : grid.lambda) {
        ScoreRow row{gamma, lambda, nu, kInfeasibleScore, 0};
        if (feasible) {
          cfg.gamma = gamma;
          cfg.lambda = lambda;
          auto model = elem0_solve(maps, ctx.tree, cfg, ctx.genes);
          row.ebic = ebic_score(model, covs);
          row.df_total = df_total(model.networks);
          out.table.push_back(row);
          const bool better = !have_best || row.ebic < out.table[best].ebic ||
                              (row.ebic == out.table[best].ebic && tie_break_less(row, out.table[best]));
          if (row.ebic < kInfeasibleScore && better) {
            best = out.table.size() - 1;
            have_best = true;
            out.model = std::move(model);
          }
        } else {
          out.table.push_back(row);
        }
      }
    }
  }
  out.best = out.table[best_row(out.table)];
  return out;
}

CategoricalSelectionResult select_categorical_parameters(const std::vector<std::vector<ExpressionMatrix>>& data,
                                                         const TreeHypergraph& tree, const ParameterGrid& grid,
                                                         const SolverConfig& base) {
  grid.validate();
  const auto ctx = validate_categorical_inputs(data, tree, base);
  const int K = tree.node_count();
  const int C = ctx.categories;
  const auto covs = sample_covariances(ctx.cells, base.center_data, base.threads);

  CategoricalSelectionResult out;
  std::size_t best = 0;
  bool have_best = false;
  for (double nu : grid.nu) {
    SolverConfig cfg = base;
    cfg.nu = nu;
    cfg.nu_per_population.clear();
    BackwardMapSet maps;
    bool feasible = true;
    try {
      maps = backward_maps(covs, expand_nu_per_cell(cfg, K, C));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularAfterJitter) throw;
      feasible = false;
    }
    for (double gamma : grid.gamma) {
      for (double lambda : grid.lambda) {
        ScoreRow row{gamma, lambda, nu, kInfeasibleScore, 0};
        if (feasible) {
          cfg.gamma = gamma;
          cfg.lambda = lambda;
          auto model = categorical_solve(maps, C, tree, cfg, ctx.genes);
          std::vector<SparseSymmetric> totals;
          for (int k = 0; k < K; ++k) {
            for (int c = 0; c < C; ++c) totals.push_back(model.total(k, c));
          }
          row.ebic = ebic_score(totals, covs);
          row.df_total = df_total(totals);
          out.table.push_back(row);
          const bool better = !have_best || row.ebic < out.table[best].ebic ||
                              (row.ebic == out.table[best].ebic && tie_break_less(row, out.table[best]));
          if (row.ebic < kInfeasibleScore && better) {
            best = out.table.size() - 1;
            have_best = true;
            out.model = std::move(model);
          }
        } else {
          out.table.push_back(row);
        }
      }
    }
  }
  out.best = out.table[best_row(out.table)];
  return out;
}

}  // namespace elem0
