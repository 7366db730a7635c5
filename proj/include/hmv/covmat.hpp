#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hmv/error.hpp"
#include "hmv/linalg.hpp"
#include "hmv/rng.hpp"

namespace hmv {

/// Symmetric square matrix of asset covariances with optional asset labels.
///
/// Construction validates shape, finiteness and symmetry (relative tolerance
/// 1e-12 against the largest entry). Positivity of the diagonal is checked
/// by the consumers that need it.
class CovarianceMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  CovarianceMatrix() = default;

  explicit CovarianceMatrix(Matrix values, std::vector<std::string> labels = {})
      : values_(std::move(values)), labels_(std::move(labels)) {
    if (values_.rows() != values_.cols()) {
      throw Error(ErrorCode::NotSquare, "covariance is " + std::to_string(values_.rows()) + "x" +
                                            std::to_string(values_.cols()));
    }
    if (!values_.allFinite()) {
      throw Error(ErrorCode::NonFiniteInput, "covariance has non-finite entries");
    }
    if (!labels_.empty() && static_cast<Index>(labels_.size()) != values_.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "label count does not match covariance size");
    }
    const double scale = std::max(1.0, detail::max_abs(values_));
    if (detail::max_abs(values_ - values_.transpose()) > kSymmetryTol * scale) {
      throw Error(ErrorCode::NotSymmetric, "covariance is not symmetric");
    }
  }

  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  Index size() const noexcept { return values_.rows(); }
  double operator()(Index i, Index j) const { return values_(i, j); }

 private:
  Matrix values_;
  std::vector<std::string> labels_;
};

/// T x n panel of per-period returns.
struct ReturnsPanel {
  Matrix values;
  std::vector<std::string> labels;

  Index periods() const noexcept { return values.rows(); }
  Index assets() const noexcept { return values.cols(); }
};

/// Demeaned sample covariance with divisor T-1.
inline CovarianceMatrix empirical_covariance(const ReturnsPanel& samples) {
  const Index periods = samples.periods();
  if (periods < 2) {
    throw Error(ErrorCode::TooFewSamples, "need at least 2 samples, got " + std::to_string(periods));
  }
  if (!samples.values.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "returns panel has non-finite entries");
  }
  // Shift by the first row before centering so constant columns come out as
  // exact zeros.
  Matrix centered = samples.values.rowwise() - samples.values.row(0);
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(periods - 1);
  detail::symmetrize(cov);
  return CovarianceMatrix(std::move(cov), samples.labels);
}

/// Options for the equicorrelation anchor.
struct AnchorOptions {
  /// Standard deviation of the log-variance jitter; 0 disables it.
  double variance_jitter = 0.0;
};

/// Equicorrelation anchor: unit diagonal, every off-diagonal entry equal to
/// rho. With variance jitter enabled the matrix is rescaled as S R S with
/// S = diag(exp(jitter * z / 2)).
inline CovarianceMatrix rand_symm_cov(Index dim, double rho, Rng& rng, const AnchorOptions& options = {}) {
  if (dim < 1) {
    throw Error(ErrorCode::InvalidConfig, "dimension must be positive");
  }
  if (dim > 1) {
    const double lower = -1.0 / static_cast<double>(dim - 1);
    if (!(rho > lower && rho < 1.0)) {
      throw Error(ErrorCode::InvalidRho, "rho " + std::to_string(rho) + " outside (" + std::to_string(lower) +
                                             ", 1) for dimension " + std::to_string(dim));
    }
  }
  Matrix cov = Matrix::Constant(dim, dim, rho);
  cov.diagonal().setOnes();
  if (options.variance_jitter > 0.0) {
    Vector scale(dim);
    for (Index i = 0; i < dim; ++i) {
      scale(i) = std::exp(0.5 * options.variance_jitter * rng.normal());
    }
    cov = scale.asDiagonal() * cov * scale.asDiagonal();
    detail::symmetrize(cov);
  }
  return CovarianceMatrix(std::move(cov));
}

namespace detail {

/// Lower factor L with L L^T = cov. Semidefinite input falls back to a
/// pivoted LDLT with the diagonal clamped at zero.
inline Matrix psd_factor(const Matrix& cov) {
  const Index n = cov.rows();
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  Eigen::LDLT<Matrix> ldlt(cov);
  const double scale = std::max(1.0, detail::max_abs(cov.diagonal()));
  const double tol = 1e-10 * scale * static_cast<double>(n);
  Vector d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || (d.array() < -tol).any()) {
    throw Error(ErrorCode::NotPSD, "covariance is not positive semi-definite");
  }
  d = d.cwiseMax(0.0).cwiseSqrt();
  Matrix lower = ldlt.matrixL();
  Matrix factor = lower * d.asDiagonal();
  // Undo the pivoting: cov = P^T L D L^T P.
  return ldlt.transpositionsP().transpose() * factor;
}

}  // namespace detail

/// `count` i.i.d. zero-mean Gaussian draws with covariance `cov`.
inline ReturnsPanel sample_gaussian(const CovarianceMatrix& cov, Index count, Rng& rng) {
  if (count < 1) {
    throw Error(ErrorCode::InvalidConfig, "sample count must be positive");
  }
  const Index n = cov.size();
  const Matrix factor = detail::psd_factor(cov.values());
  Matrix z(count, n);
  for (Index t = 0; t < count; ++t) {
    for (Index j = 0; j < n; ++j) {
      z(t, j) = rng.normal();
    }
  }
  return ReturnsPanel{z * factor.transpose(), cov.labels()};
}

inline double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    return -std::numeric_limits<double>::infinity();
  }
  return solver.eigenvalues()(0);
}

inline bool is_positive_definite(const Matrix& m, double tol) { return min_eigenvalue(m) > tol; }

inline bool is_positive_definite(const CovarianceMatrix& cov, double tol) {
  return is_positive_definite(cov.values(), tol);
}

}  // namespace hmv
