#include "elem0/covmap.hpp"

#include "elem0/parallel.hpp"

#include <cmath>
#include <sstream>

namespace elem0 {

SampleCovariance sample_covariance(const ExpressionMatrix& x, bool center) {
  if (x.values.cols() < 1) throw Error(ErrorKind::InvalidArgument, "sample covariance needs at least one sample");
  if (!x.values.allFinite()) throw Error(ErrorKind::NonFiniteInput, "expression matrix contains NaN or infinite values");
  const auto n = x.values.cols();
  SampleCovariance out;
  out.samples = n;
  if (center) {
    Matrix centered = x.values.colwise() - x.values.rowwise().mean();
    out.matrix.noalias() = centered * centered.transpose();
  } else {
    out.matrix.noalias() = x.values * x.values.transpose();
  }
  out.matrix /= static_cast<double>(n);
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  return out;
}

Matrix soft_threshold(const Matrix& m, double nu) {
  Matrix out = m;
  const auto p = m.rows();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == j) continue;
      const double v = m(i, j);
      const double shrink = std::min(nu, std::abs(v));
      out(i, j) = v > 0.0 ? v - shrink : (v < 0.0 ? v + shrink : 0.0);
    }
  }
  return out;
}

namespace {

// Returns true and fills `inverse` when `a` factors and inverts accurately.
bool try_invert(const Matrix& a, Matrix& inverse) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return false;
  inverse = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  if (!inverse.allFinite()) return false;
  inverse = 0.5 * (inverse + inverse.transpose()).eval();
  const double residual = (a * inverse - Matrix::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
  return residual <= kInverseResidualTolerance;
}

}  // namespace

BackwardMap backward_map(const SampleCovariance& cov, double nu, const SolverConfig& cfg) {
  if (!std::isfinite(nu) || nu < 0.0) throw Error(ErrorKind::InvalidArgument, "nu must be finite and non-negative");
  const Matrix thresholded = soft_threshold(cov.matrix, nu);
  BackwardMap out;
  if (try_invert(thresholded, out.inverse)) return out;
  const auto p = thresholded.rows();
  for (double delta = cfg.pd_jitter_start; delta <= cfg.pd_jitter_cap * (1.0 + 1e-12); delta *= 10.0) {
    Matrix repaired = thresholded;
    repaired.diagonal().array() += delta;
    if (try_invert(repaired, out.inverse)) {
      out.jitter = delta;
      return out;
    }
  }
  std::ostringstream os;
  os << "soft-thresholded covariance (p=" << p << ", nu=" << nu
     << ") is not positive definite even with ridge " << cfg.pd_jitter_cap
     << "; nu is too small or the data are degenerate";
  throw Error(ErrorKind::SingularAfterJitter, os.str());
}

std::vector<SampleCovariance> sample_covariances(const std::vector<ExpressionMatrix>& data, bool center,
                                                 int threads) {
  std::vector<SampleCovariance> out(data.size());
  parallel_for(data.size(), threads, [&](std::size_t k) { out[k] = sample_covariance(data[k], center); });
  return out;
}

BackwardMapSet backward_maps(const std::vector<SampleCovariance>& covs, const SolverConfig& cfg) {
  BackwardMapSet out;
  out.maps.resize(covs.size());
  out.jitter.assign(covs.size(), 0.0);
  parallel_for(covs.size(), cfg.threads, [&](std::size_t k) {
    try {
      auto bm = backward_map(covs[k], cfg.nu_for(static_cast<int>(k)), cfg);
      out.maps[k] = std::move(bm.inverse);
      out.jitter[k] = bm.jitter;
    } catch (const Error& e) {
      throw Error(e.kind(), "population " + std::to_string(k + 1) + ": " + e.detail());
    }
  });
  return out;
}

}  // namespace elem0
