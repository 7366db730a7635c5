#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/portfolio.hpp"

namespace hmv {

/// Multiplies every off-diagonal entry by xi, i.e. xi * S + (1 - xi) * diag(S).
inline CovarianceMatrix scale_off_diagonal(const CovarianceMatrix& cov, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw Error(ErrorCode::XiOutOfRange, "xi " + std::to_string(xi) + " outside [0, 1]");
  }
  Matrix out = cov.values() * xi;
  out.diagonal() = cov.values().diagonal();
  return CovarianceMatrix(std::move(out), cov.labels());
}

/// Zeroes short positions and rescales the survivors to sum to one.
inline WeightVector long_only_clip(const WeightVector& weights) {
  Vector clipped = weights.values.cwiseMax(0.0);
  const double mass = clipped.sum();
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::AllNonPositive, "no positive weight to redistribute");
  }
  return WeightVector{clipped / mass, weights.labels};
}

struct ShrinkagePoint {
  double xi = 0.0;
  double clipped_variance = 0.0;
};

struct ShrinkageResult {
  double xi = 1.0;
  CovarianceMatrix shrunk;
  /// Minimum-variance weights of `shrunk`; may carry small shorts.
  WeightVector weights;
  /// Variance of the clipped weights under the original matrix.
  double clipped_variance = 0.0;
  std::vector<ShrinkagePoint> curve;
  /// Grid points where the minimum-variance solve failed.
  std::vector<double> skipped;
};

inline constexpr double kDefaultShrinkGridStep = 0.001;

/// "Weak" shrinkage: grid search over xi in [0, 1] for the off-diagonal
/// scaling whose long-only-clipped minimum-variance portfolio has the
/// smallest variance under the original matrix. Ties go to the smaller xi.
inline ShrinkageResult weak_shrink(const CovarianceMatrix& cov, double grid_step = kDefaultShrinkGridStep) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "grid step must lie in (0, 1]");
  }
  const auto steps = static_cast<long>(std::ceil(1.0 / grid_step - 1e-9));

  ShrinkageResult result;
  result.curve.reserve(static_cast<std::size_t>(steps) + 1);
  bool found = false;
  double best_xi = 0.0;
  double best_var = 0.0;
  WeightVector best_weights;

  for (long i = 0; i <= steps; ++i) {
    const double xi = std::min(1.0, static_cast<double>(i) * grid_step);
    try {
      const WeightVector w = min_var_unit(scale_off_diagonal(cov, xi));
      const WeightVector clipped = long_only_clip(w);
      const double v = portfolio_variance(cov, clipped);
      result.curve.push_back({xi, v});
      if (!found || v < best_var) {
        found = true;
        best_xi = xi;
        best_var = v;
        best_weights = w;
      }
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::SingularCovariance:
        case ErrorCode::ZeroNormalizer:
        case ErrorCode::AllNonPositive:
          result.skipped.push_back(xi);
          break;
        default:
          throw;
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::NoFeasibleXi, "minimum-variance solve failed at every grid point");
  }
  result.xi = best_xi;
  result.shrunk = scale_off_diagonal(cov, best_xi);
  result.weights = std::move(best_weights);
  result.clipped_variance = best_var;
  return result;
}

}  // namespace hmv
