#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/linalg.hpp"

namespace hmv {

/// Portfolio weights as fractions of wealth.
struct WeightVector {
  Vector values;
  std::vector<std::string> labels;

  Index size() const noexcept { return values.size(); }
  double sum() const { return values.sum(); }
  double operator()(Index i) const { return values(i); }
};

/// Solution x = Q^-1 b of a symmetric system read as a scaled portfolio:
/// x = weights / fitness, with b^T weights = 1 and fitness = 1 / (b^T Q^-1 b).
struct ScaledSolution {
  Vector values;
  double fitness = 0.0;
  WeightVector weights;
};

namespace detail {

/// x / sum(x); rejects a vanishing normalizer.
inline Vector normalize_sum(const Vector& x, const char* what) {
  const double s = x.sum();
  if (!std::isfinite(s) || std::abs(s) <= 1e-14 * x.cwiseAbs().sum() || s == 0.0) {
    throw Error(ErrorCode::ZeroNormalizer, std::string(what) + ": weights sum to zero");
  }
  return x / s;
}

}  // namespace detail

/// Unit-budget minimum-variance weights w = S^-1 1 / (1^T S^-1 1).
inline WeightVector min_var_unit(const CovarianceMatrix& cov, double min_rcond = Tolerances{}.rcond) {
  const detail::GuardedSolver solver(cov.values(), min_rcond, ErrorCode::SingularCovariance,
                                     "minimum-variance solve");
  const Vector x = solver.solve(Vector::Ones(cov.size()));
  return WeightVector{detail::normalize_sum(x, "min_var_unit"), cov.labels()};
}

/// Minimum-variance portfolio under the budget constraint b^T w = 1.
inline ScaledSolution min_var_general(const CovarianceMatrix& q, const Vector& b,
                                      double min_rcond = Tolerances{}.rcond) {
  if (b.size() != q.size()) {
    throw Error(ErrorCode::DimensionMismatch, "constraint vector length does not match Q");
  }
  const detail::GuardedSolver solver(q.values(), min_rcond, ErrorCode::SingularQ, "Q solve");
  const Vector x = solver.solve(b);
  const double denom = b.dot(x);
  if (!std::isfinite(denom) || std::abs(denom) <= 1e-14 * b.norm() * x.norm()) {
    throw Error(ErrorCode::DegenerateConstraint, "b^T Q^-1 b vanishes");
  }
  const double fitness = 1.0 / denom;
  return ScaledSolution{x, fitness, WeightVector{x * fitness, q.labels()}};
}

inline double portfolio_variance(const CovarianceMatrix& cov, const Vector& w) {
  if (w.size() != cov.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights have " + std::to_string(w.size()) +
                                                  " entries, covariance has " + std::to_string(cov.size()));
  }
  return w.dot(cov.values() * w);
}

inline double portfolio_variance(const CovarianceMatrix& cov, const WeightVector& w) {
  return portfolio_variance(cov, w.values);
}

}  // namespace hmv
