#pragma once

#include <Eigen/Dense>

#include <string>

#include "hmv/error.hpp"

namespace hmv {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical thresholds shared by the solvers and the allocator.
struct Tolerances {
  /// Minimum eigenvalue, relative to the mean diagonal, for a complement to
  /// count as positive definite.
  double eps_pd = 1e-8;
  /// Floor on |b_i| before dividing by b b^T.
  double eps_b = 1e-6;
  /// Solves are rejected below this reciprocal condition estimate.
  double rcond = 1e-12;
};

namespace detail {

inline void symmetrize(Matrix& m) {
  m = (0.5 * (m + m.transpose())).eval();
}

/// LU factorization guarded by a reciprocal condition estimate. Every
/// "inverse times something" in the library goes through this.
class GuardedSolver {
 public:
  GuardedSolver(const Matrix& m, double min_rcond, ErrorCode on_fail, const std::string& what)
      : lu_(m) {
    const double rc = m.size() == 0 ? 1.0 : lu_.rcond();
    if (!(rc >= min_rcond)) {
      throw Error(on_fail, what + " (rcond " + std::to_string(rc) + ")");
    }
  }

  template <typename Rhs>
  Matrix solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return lu_.solve(rhs);
  }

  Matrix inverse() const { return lu_.inverse(); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace detail
}  // namespace hmv
