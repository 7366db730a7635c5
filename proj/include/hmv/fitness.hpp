#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/portfolio.hpp"
#include "hmv/shrinkage.hpp"

namespace hmv {

/// Inverse investment fitness of a sub-portfolio. Capital is split between
/// two groups in the ratio 1/nu(A) : 1/nu(D).
enum class FitnessKind {
  subportfolio_variance,
  minvar_variance,
  weak_minvar_variance,
  /// sum_i S_ii^2. Ignores correlations; kept to exhibit that failure mode.
  diag_sum_squares,
};

constexpr std::string_view to_string(FitnessKind kind) {
  switch (kind) {
    case FitnessKind::subportfolio_variance: return "subportfolio_variance";
    case FitnessKind::minvar_variance: return "minvar_variance";
    case FitnessKind::weak_minvar_variance: return "weak_minvar_variance";
    case FitnessKind::diag_sum_squares: return "diag_sum_squares";
  }
  return "unknown";
}

inline FitnessKind parse_fitness_kind(std::string_view name) {
  for (auto kind : {FitnessKind::subportfolio_variance, FitnessKind::minvar_variance,
                    FitnessKind::weak_minvar_variance, FitnessKind::diag_sum_squares}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown fitness '" + std::string(name) + "'");
}

struct FitnessOptions {
  double shrink_grid_step = kDefaultShrinkGridStep;
  double rcond = Tolerances{}.rcond;
};

inline double fitness(const CovarianceMatrix& cov, FitnessKind kind,
                      const std::optional<WeightVector>& child_weights = std::nullopt,
                      const FitnessOptions& options = {}) {
  switch (kind) {
    case FitnessKind::subportfolio_variance:
      if (!child_weights) {
        throw Error(ErrorCode::InvalidConfig, "subportfolio_variance needs the child weights");
      }
      return portfolio_variance(cov, *child_weights);
    case FitnessKind::minvar_variance: {
      const detail::GuardedSolver solver(cov.values(), options.rcond, ErrorCode::SingularCovariance,
                                         "minvar fitness solve");
      const double denom = solver.solve(Vector::Ones(cov.size())).sum();
      if (!std::isfinite(denom) || denom == 0.0) {
        throw Error(ErrorCode::ZeroNormalizer, "1^T S^-1 1 vanishes");
      }
      return 1.0 / denom;
    }
    case FitnessKind::weak_minvar_variance: {
      const ShrinkageResult shrink = weak_shrink(cov, options.shrink_grid_step);
      return portfolio_variance(cov, shrink.weights);
    }
    case FitnessKind::diag_sum_squares:
      return cov.values().diagonal().squaredNorm();
  }
  throw Error(ErrorCode::InvalidConfig, "unknown fitness kind");
}

}  // namespace hmv
