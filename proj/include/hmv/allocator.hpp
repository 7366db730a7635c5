#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/fitness.hpp"
#include "hmv/linalg.hpp"
#include "hmv/portfolio.hpp"
#include "hmv/schur.hpp"
#include "hmv/seriation.hpp"
#include "hmv/shrinkage.hpp"

namespace hmv {

/// Recursion flavor.
///
///  - hrp: raw diagonal blocks are passed down and compared (gamma ignored).
///  - schur_literal: children recurse on A'' and are scaled by 1/nu(A').
///  - schur_debiased: as literal, but each child's weights are first divided
///    element-wise by its b-vector. Since A'' = D_b^-1 A^c D_b^-1, this removes
///    the extra factor of b the literal recursion picks up and, at gamma = 1
///    with minimum-variance fitness and terminal, reproduces S^-1 1 exactly.
enum class AllocationMode { hrp, schur_literal, schur_debiased };

enum class TerminalMethod { minvar, weak_minvar, equal_weight, inverse_variance };

constexpr std::string_view to_string(AllocationMode mode) {
  switch (mode) {
    case AllocationMode::hrp: return "hrp";
    case AllocationMode::schur_literal: return "schur_literal";
    case AllocationMode::schur_debiased: return "schur_debiased";
  }
  return "unknown";
}

constexpr std::string_view to_string(TerminalMethod method) {
  switch (method) {
    case TerminalMethod::minvar: return "minvar";
    case TerminalMethod::weak_minvar: return "weak_minvar";
    case TerminalMethod::equal_weight: return "equal_weight";
    case TerminalMethod::inverse_variance: return "inverse_variance";
  }
  return "unknown";
}

inline AllocationMode parse_allocation_mode(std::string_view name) {
  for (auto mode : {AllocationMode::hrp, AllocationMode::schur_literal, AllocationMode::schur_debiased}) {
    if (to_string(mode) == name) return mode;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

inline TerminalMethod parse_terminal_method(std::string_view name) {
  for (auto method : {TerminalMethod::minvar, TerminalMethod::weak_minvar, TerminalMethod::equal_weight,
                      TerminalMethod::inverse_variance}) {
    if (to_string(method) == name) return method;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown terminal method '" + std::string(name) + "'");
}

struct AllocationConfig {
  GammaPair gammas = GammaPair::uniform(1.0);
  AllocationMode mode = AllocationMode::schur_debiased;
  FitnessKind fitness = FitnessKind::minvar_variance;
  TerminalMethod terminal = TerminalMethod::minvar;
  /// Recursion stops once a block has at most this many assets.
  Index terminal_size = 5;
  SeriationMethod seriation = SeriationMethod::single_linkage;
  /// Scale gamma by the largest feasible gamma of each split.
  bool adaptive_cap = true;
  Tolerances tolerances{};
  double shrink_grid_step = kDefaultShrinkGridStep;

  void validate() const {
    if (terminal_size < 1) {
      throw Error(ErrorCode::InvalidConfig, "terminal size must be at least 1");
    }
    gammas.validate();
    if (!(shrink_grid_step > 0.0 && shrink_grid_step <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "shrink grid step must lie in (0, 1]");
    }
  }

  /// hrp ignores the configured gammas.
  GammaPair effective_gammas() const { return mode == AllocationMode::hrp ? GammaPair{0.0, 0.0} : gammas; }
};

struct SplitDiagnostic {
  int depth = 0;
  /// First position of the block within the seriated order.
  Index offset = 0;
  Index size = 0;
  Index split_index = 0;
  double gamma_cap = 1.0;
  double gamma_c = 0.0;
  double gamma_b = 0.0;
  double nu_a = 0.0;
  double nu_d = 0.0;
  double b_a_min = 1.0;
  double b_a_max = 1.0;
  double b_d_min = 1.0;
  double b_d_max = 1.0;
  int retries = 0;
  bool fell_back_to_zero = false;
};

struct AllocationReport {
  WeightVector weights;
  std::vector<SplitDiagnostic> splits;
  Permutation seriation;
  /// In-sample variance w^T S w of the returned weights.
  double portfolio_variance = 0.0;
};

namespace detail {

inline Vector terminal_weights(const CovarianceMatrix& cov, const AllocationConfig& config) {
  switch (config.terminal) {
    case TerminalMethod::minvar:
      return min_var_unit(cov, config.tolerances.rcond).values;
    case TerminalMethod::weak_minvar:
      return weak_shrink(cov, config.shrink_grid_step).weights.values;
    case TerminalMethod::equal_weight:
      return Vector::Constant(cov.size(), 1.0 / static_cast<double>(cov.size()));
    case TerminalMethod::inverse_variance:
      return normalize_sum(cov.values().diagonal().cwiseInverse(), "inverse_variance");
  }
  throw Error(ErrorCode::InvalidConfig, "unknown terminal method");
}

inline bool retryable(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateBVector:
    case ErrorCode::SingularComplement:
    case ErrorCode::SingularComplementBlock:
    case ErrorCode::SingularPrecisionProduct:
      return true;
    default:
      return false;
  }
}

/// Matrices one split hands to its children and to the fitness function.
struct SplitMatrices {
  CovarianceMatrix intra_a, intra_d, inter_a, inter_d;
  Vector b_a, b_d;
};

inline SplitMatrices split_matrices(const BlockSplit& split, const GammaPair& gammas, const Tolerances& tol) {
  if (gammas.is_zero()) {
    CovarianceMatrix a(split.own(Side::A), split.labels(Side::A));
    CovarianceMatrix d(split.own(Side::D), split.labels(Side::D));
    return {a, d, a, d, Vector::Ones(split.k()), Vector::Ones(split.n() - split.k())};
  }
  return {augment_intra(split, Side::A, gammas, tol),
          augment_intra(split, Side::D, gammas, tol),
          augment_inter(split, Side::A, gammas, tol),
          augment_inter(split, Side::D, gammas, tol),
          b_vector(split, Side::A, gammas.gamma_b, std::nullopt, tol.rcond),
          b_vector(split, Side::D, gammas.gamma_b, std::nullopt, tol.rcond)};
}

class Recursion {
 public:
  Recursion(const AllocationConfig& config, std::vector<SplitDiagnostic>& diagnostics)
      : config_(config), gammas_(config.effective_gammas()), diagnostics_(diagnostics) {}

  Vector run(const CovarianceMatrix& cov, Index offset, int depth) {
    const Index n = cov.size();
    if (n <= config_.terminal_size) {
      return terminal_weights(cov, config_);
    }
    const BlockSplit split(cov, (n + 1) / 2);
    SplitDiagnostic diag;
    diag.depth = depth;
    diag.offset = offset;
    diag.size = n;
    diag.split_index = split.k();

    GammaPair gammas = gammas_;
    if (!gammas.is_zero() && config_.adaptive_cap) {
      diag.gamma_cap = std::min(max_feasible_gamma(split, Side::A, config_.tolerances),
                                max_feasible_gamma(split, Side::D, config_.tolerances));
      gammas = gammas.scaled(diag.gamma_cap);
    }
    std::optional<SplitMatrices> mats;
    constexpr int kMaxHalvings = 5;
    while (!mats) {
      try {
        mats.emplace(split_matrices(split, gammas, config_.tolerances));
      } catch (const Error& e) {
        if (!retryable(e.code())) throw;
        if (diag.retries < kMaxHalvings) {
          ++diag.retries;
          gammas = gammas.scaled(0.5);
        } else {
          diag.fell_back_to_zero = true;
          gammas = {0.0, 0.0};
        }
      }
    }
    diag.gamma_c = gammas.gamma_c;
    diag.gamma_b = gammas.gamma_b;
    diag.b_a_min = mats->b_a.minCoeff();
    diag.b_a_max = mats->b_a.maxCoeff();
    diag.b_d_min = mats->b_d.minCoeff();
    diag.b_d_max = mats->b_d.maxCoeff();

    const Vector w_a = run(mats->intra_a, offset, depth + 1);
    const Vector w_d = run(mats->intra_d, offset + split.k(), depth + 1);

    const FitnessOptions fit_opts{config_.shrink_grid_step, config_.tolerances.rcond};
    diag.nu_a = fitness(mats->inter_a, config_.fitness, WeightVector{w_a, {}}, fit_opts);
    diag.nu_d = fitness(mats->inter_d, config_.fitness, WeightVector{w_d, {}}, fit_opts);
    if (!std::isfinite(diag.nu_a) || !std::isfinite(diag.nu_d) || diag.nu_a == 0.0 || diag.nu_d == 0.0) {
      throw Error(ErrorCode::ZeroNormalizer, "sub-portfolio fitness is zero or non-finite");
    }

    Vector combined(n);
    if (config_.mode == AllocationMode::schur_debiased) {
      combined.head(split.k()) = w_a.cwiseQuotient(mats->b_a) / diag.nu_a;
      combined.tail(n - split.k()) = w_d.cwiseQuotient(mats->b_d) / diag.nu_d;
    } else {
      combined.head(split.k()) = w_a / diag.nu_a;
      combined.tail(n - split.k()) = w_d / diag.nu_d;
    }
    diagnostics_.push_back(diag);
    return normalize_sum(combined, "allocate");
  }

 private:
  const AllocationConfig& config_;
  GammaPair gammas_;
  std::vector<SplitDiagnostic>& diagnostics_;
};

}  // namespace detail

/// Hierarchical allocation. Seriates once, then bisects the fixed order at
/// k = ceil(n/2) until blocks have at most `terminal_size` assets. Weights
/// come back in the caller's asset order and sum to one.
inline AllocationReport allocate(const CovarianceMatrix& cov, const AllocationConfig& config = {}) {
  config.validate();
  if (cov.size() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "cannot allocate over zero assets");
  }
  if ((cov.values().diagonal().array() <= 0.0).any()) {
    throw Error(ErrorCode::ZeroVariance, "every asset needs a positive variance");
  }
  AllocationReport report;
  report.seriation = seriate(cov, config.seriation);
  const CovarianceMatrix ordered = report.seriation.is_identity() ? cov : apply_permutation(cov, report.seriation);

  detail::Recursion recursion(config, report.splits);
  const Vector w_ordered = recursion.run(ordered, 0, 0);
  Vector w = apply_inverse_permutation(w_ordered, report.seriation);
  report.weights = WeightVector{std::move(w), cov.labels()};
  report.portfolio_variance = portfolio_variance(cov, report.weights);
  return report;
}

namespace detail {

inline Vector exact_values(const CovarianceMatrix& q, const Vector& b, const GammaPair& gammas, Index terminal_size,
                           std::optional<Index> split_at, double min_rcond) {
  const Index n = q.size();
  if (n <= terminal_size) {
    const GuardedSolver solver(q.values(), min_rcond, ErrorCode::SingularQ, "terminal Q solve");
    return solver.solve(b);
  }
  const BlockSplit split(q, split_at.value_or((n + 1) / 2));
  const Index k = split.k();
  CovarianceMatrix a_c, d_c;
  Vector b_a, b_d;
  try {
    a_c = schur_complement(split, Side::A, gammas.gamma_c, min_rcond);
    d_c = schur_complement(split, Side::D, gammas.gamma_c, min_rcond);
    b_a = b_vector(split, Side::A, gammas.gamma_b, b, min_rcond);
    b_d = b_vector(split, Side::D, gammas.gamma_b, b, min_rcond);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularComplementBlock) {
      throw Error(ErrorCode::SingularComplement, e.what());
    }
    throw;
  }
  Vector out(n);
  out.head(k) = exact_values(a_c, b_a, gammas, terminal_size, std::nullopt, min_rcond);
  out.tail(n - k) = exact_values(d_c, b_d, gammas, terminal_size, std::nullopt, min_rcond);
  return out;
}

}  // namespace detail

/// Constraint-propagating recursion: each half solves against its Schur
/// complement with the b-vector inherited from the other half. At
/// gamma = (1, 1) the values equal Q^-1 b for any choice of split points.
/// `root_split` overrides the top-level split index only.
inline ScaledSolution allocate_exact(const CovarianceMatrix& q, const Vector& b, const GammaPair& gammas,
                                     Index terminal_size, std::optional<Index> root_split = std::nullopt,
                                     double min_rcond = Tolerances{}.rcond) {
  gammas.validate();
  if (terminal_size < 1) {
    throw Error(ErrorCode::InvalidConfig, "terminal size must be at least 1");
  }
  if (b.size() != q.size()) {
    throw Error(ErrorCode::DimensionMismatch, "constraint vector length does not match Q");
  }
  const Vector values = detail::exact_values(q, b, gammas, terminal_size, root_split, min_rcond);
  const double denom = b.dot(values);
  if (!std::isfinite(denom) || std::abs(denom) <= 1e-14 * b.norm() * values.norm()) {
    throw Error(ErrorCode::DegenerateConstraint, "b^T Q^-1 b vanishes");
  }
  const double fit = 1.0 / denom;
  return ScaledSolution{values, fit, WeightVector{values * fit, q.labels()}};
}

}  // namespace hmv
