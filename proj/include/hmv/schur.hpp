#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/linalg.hpp"

namespace hmv {

/// Which diagonal block of a split an operation targets. The A side is the
/// leading k x k block, the D side the trailing one.
enum class Side { A, D };

/// Bisection of a covariance matrix at index k:
///
///     S = [ A  B ]
///         [ C  D ]    with C = B^T.
///
/// Holds a reference to the parent, which must outlive the split.
class BlockSplit {
 public:
  BlockSplit(const CovarianceMatrix& parent, Index k) : parent_(&parent), k_(k) {
    if (k < 1 || k >= parent.size()) {
      throw Error(ErrorCode::BadIndex, "split index " + std::to_string(k) + " outside [1, " +
                                           std::to_string(parent.size() - 1) + "]");
    }
  }

  const CovarianceMatrix& parent() const noexcept { return *parent_; }
  Index k() const noexcept { return k_; }
  Index n() const noexcept { return parent_->size(); }
  Index size(Side side) const noexcept { return side == Side::A ? k_ : n() - k_; }

  auto A() const { return parent_->values().topLeftCorner(k_, k_); }
  auto B() const { return parent_->values().topRightCorner(k_, n() - k_); }
  auto C() const { return parent_->values().bottomLeftCorner(n() - k_, k_); }
  auto D() const { return parent_->values().bottomRightCorner(n() - k_, n() - k_); }

  /// The block on `side`, the opposite block, and the coupling block that
  /// maps the opposite side's coordinates into this side's.
  Matrix own(Side side) const { return side == Side::A ? Matrix(A()) : Matrix(D()); }
  Matrix other(Side side) const { return side == Side::A ? Matrix(D()) : Matrix(A()); }
  Matrix coupling(Side side) const { return side == Side::A ? Matrix(B()) : Matrix(C()); }

  std::vector<std::string> labels(Side side) const {
    const auto& all = parent_->labels();
    if (all.empty()) return {};
    return side == Side::A ? std::vector<std::string>(all.begin(), all.begin() + k_)
                           : std::vector<std::string>(all.begin() + k_, all.end());
  }

 private:
  const CovarianceMatrix* parent_;
  Index k_;
};

inline BlockSplit split(const CovarianceMatrix& cov, Index k) { return BlockSplit(cov, k); }

/// Blend weights: gamma_c scales the Schur-complement correction, gamma_b
/// the b-vector correction.
struct GammaPair {
  double gamma_c = 1.0;
  double gamma_b = 1.0;

  static GammaPair uniform(double gamma) { return {gamma, gamma}; }

  void validate() const {
    if (!(gamma_c >= 0.0 && gamma_c <= 1.0) || !(gamma_b >= 0.0 && gamma_b <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "gammas must lie in [0, 1]");
    }
  }

  GammaPair scaled(double factor) const { return {gamma_c * factor, gamma_b * factor}; }
  bool is_zero() const { return gamma_c == 0.0 && gamma_b == 0.0; }
};

namespace detail {

inline GuardedSolver other_block_solver(const BlockSplit& split, Side side, double min_rcond) {
  return GuardedSolver(split.other(side), min_rcond, ErrorCode::SingularComplementBlock,
                       side == Side::A ? "D block solve" : "A block solve");
}

}  // namespace detail

/// A-side: A - gamma_c B D^-1 C. D-side: D - gamma_c C A^-1 B.
inline CovarianceMatrix schur_complement(const BlockSplit& split, Side side, double gamma_c,
                                         double min_rcond = Tolerances{}.rcond) {
  Matrix own = split.own(side);
  if (gamma_c == 0.0) {
    return CovarianceMatrix(std::move(own), split.labels(side));
  }
  const auto solver = detail::other_block_solver(split, side, min_rcond);
  const Matrix coupling = split.coupling(side);
  own -= gamma_c * coupling * solver.solve(coupling.transpose());
  detail::symmetrize(own);
  return CovarianceMatrix(std::move(own), split.labels(side));
}

/// A-side: carry_top - gamma_b B D^-1 carry_bottom, and symmetrically for D.
/// `carry` spans the whole parent and defaults to all ones.
inline Vector b_vector(const BlockSplit& split, Side side, double gamma_b,
                       const std::optional<Vector>& carry = std::nullopt,
                       double min_rcond = Tolerances{}.rcond) {
  const Vector full = carry ? *carry : Vector::Ones(split.n());
  if (full.size() != split.n()) {
    throw Error(ErrorCode::DimensionMismatch, "carry vector does not span the split");
  }
  const Index k = split.k();
  const Index rest = split.n() - k;
  Vector own = side == Side::A ? Vector(full.head(k)) : Vector(full.tail(rest));
  if (gamma_b == 0.0) {
    return own;
  }
  const Vector other = side == Side::A ? Vector(full.tail(rest)) : Vector(full.head(k));
  const auto solver = detail::other_block_solver(split, side, min_rcond);
  own -= gamma_b * split.coupling(side) * solver.solve(other);
  return own;
}

/// Intra-group matrix A'' = A^c(gamma_c) / (b b^T), element-wise.
inline CovarianceMatrix augment_intra(const BlockSplit& split, Side side, const GammaPair& gammas,
                                      const Tolerances& tol = {}) {
  const CovarianceMatrix complement = schur_complement(split, side, gammas.gamma_c, tol.rcond);
  const Vector b = b_vector(split, side, gammas.gamma_b, std::nullopt, tol.rcond);
  if ((b.array().abs() < tol.eps_b).any()) {
    throw Error(ErrorCode::DegenerateBVector, "b-vector entry below " + std::to_string(tol.eps_b));
  }
  Matrix out = complement.values().array() / (b * b.transpose()).array();
  return CovarianceMatrix(std::move(out), complement.labels());
}

/// Inter-group matrix A' = ((A^c)^-1 o b b^T)^-1, the element-wise product
/// taken in the precision domain.
inline CovarianceMatrix augment_inter(const BlockSplit& split, Side side, const GammaPair& gammas,
                                      const Tolerances& tol = {}) {
  const CovarianceMatrix complement = schur_complement(split, side, gammas.gamma_c, tol.rcond);
  const Vector b = b_vector(split, side, gammas.gamma_b, std::nullopt, tol.rcond);
  if ((b.array() == 1.0).all()) {
    return complement;
  }
  const detail::GuardedSolver complement_solver(complement.values(), tol.rcond, ErrorCode::SingularComplement,
                                                "Schur complement inverse");
  const Matrix precision = complement_solver.inverse().array() * (b * b.transpose()).array();
  const detail::GuardedSolver precision_solver(precision, tol.rcond, ErrorCode::SingularPrecisionProduct,
                                               "precision product inverse");
  Matrix out = precision_solver.inverse();
  detail::symmetrize(out);
  return CovarianceMatrix(std::move(out), complement.labels());
}

/// Largest gamma in [0, 1] for which A^c(gamma) stays positive definite
/// (minimum eigenvalue above eps_pd times the block's mean variance) and
/// every b-vector entry stays at or above eps_b. Both constraints shrink
/// monotonically in gamma, so a bisection finds the boundary. Returns 1 when
/// gamma = 1 is feasible and 0 when nothing is.
inline double max_feasible_gamma(const BlockSplit& split, Side side, const Tolerances& tol = {},
                                 double resolution = 1e-6, int max_iterations = 40) {
  const Matrix own = split.own(side);
  const double scale = own.diagonal().mean();
  if (!(scale > 0.0)) return 0.0;
  const double floor = tol.eps_pd * scale;

  std::optional<detail::GuardedSolver> solver;
  try {
    solver.emplace(detail::other_block_solver(split, side, tol.rcond));
  } catch (const Error&) {
    return 0.0;
  }
  const Matrix coupling = split.coupling(side);
  const Matrix correction = coupling * solver->solve(coupling.transpose());
  const Vector b_shift = coupling * solver->solve(Vector::Ones(split.size(side == Side::A ? Side::D : Side::A)));

  auto feasible = [&](double gamma) {
    if (((1.0 - gamma * b_shift.array()) < tol.eps_b).any()) return false;
    Matrix complement = own - gamma * correction;
    detail::symmetrize(complement);
    return min_eigenvalue(complement) > floor;
  };

  if (feasible(1.0)) return 1.0;
  if (!feasible(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < max_iterations && hi - lo > resolution; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace hmv
