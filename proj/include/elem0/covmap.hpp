#pragma once

#include "elem0/model.hpp"

#include <vector>

namespace elem0 {

struct SampleCovariance {
  Matrix matrix;
  Eigen::Index samples = 0;
};

// (1/n) X X^T, optionally after subtracting each gene's mean. The result is
// made exactly symmetric.
SampleCovariance sample_covariance(const ExpressionMatrix& x, bool center);

// Shrinks off-diagonal entries toward zero by nu; the diagonal is untouched.
Matrix soft_threshold(const Matrix& m, double nu);

struct BackwardMap {
  Matrix inverse;
  double jitter = 0.0;  // ridge added to the thresholded covariance
};

// Inverse of the soft-thresholded covariance. When the thresholded matrix is
// not positive definite (or its inverse is inaccurate) a ridge delta*I is
// added, starting at cfg.pd_jitter_start and growing x10 up to
// cfg.pd_jitter_cap. Throws SingularAfterJitter past the cap.
BackwardMap backward_map(const SampleCovariance& cov, double nu, const SolverConfig& cfg);

// Residual bound every accepted inverse satisfies: max |A B - I| <= this.
inline constexpr double kInverseResidualTolerance = 1e-8;

struct BackwardMapSet {
  std::vector<Matrix> maps;
  std::vector<double> jitter;

  int population_count() const { return static_cast<int>(maps.size()); }
  int dimension() const { return maps.empty() ? 0 : static_cast<int>(maps.front().rows()); }
};

std::vector<SampleCovariance> sample_covariances(const std::vector<ExpressionMatrix>& data, bool center,
                                                 int threads);

// One map per covariance using cfg.nu_for(k); populations run in parallel.
BackwardMapSet backward_maps(const std::vector<SampleCovariance>& covs, const SolverConfig& cfg);

}  // namespace elem0
