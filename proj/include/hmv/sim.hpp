#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "hmv/allocator.hpp"
#include "hmv/covmat.hpp"
#include "hmv/error.hpp"
#include "hmv/portfolio.hpp"
#include "hmv/rng.hpp"

namespace hmv {

/// Out-of-sample experiment: equicorrelation anchor -> "true" covariance
/// estimated from `anchor_samples` draws -> working estimate from
/// `observation_samples` draws of the truth -> allocation per gamma, judged
/// by its variance under the truth.
struct ExperimentConfig {
  Index assets = 40;
  double rho = 0.35;
  Index anchor_samples = 60;
  Index observation_samples = 30;
  std::vector<double> gamma_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  int trials = 20;
  std::uint64_t seed = 1;
  AllocationConfig allocation = default_allocation();
  AnchorOptions anchor{};
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  /// Weak shrinkage feeds both the fitness and the terminal portfolio.
  static AllocationConfig default_allocation() {
    AllocationConfig c;
    c.mode = AllocationMode::schur_debiased;
    c.fitness = FitnessKind::weak_minvar_variance;
    c.terminal = TerminalMethod::weak_minvar;
    c.terminal_size = 5;
    c.seriation = SeriationMethod::single_linkage;
    c.adaptive_cap = true;
    return c;
  }

  /// Desk-scale profile used by the test suite.
  static ExperimentConfig desk() { return ExperimentConfig{}; }

  /// Full-scale profile: 500 assets, 150 anchor and 60 observation samples.
  static ExperimentConfig full() {
    ExperimentConfig c;
    c.assets = 500;
    c.anchor_samples = 150;
    c.observation_samples = 60;
    c.trials = 3;
    c.gamma_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    return c;
  }

  void validate() const {
    allocation.validate();
    if (assets < 2 * allocation.terminal_size) {
      throw Error(ErrorCode::InvalidConfig, "asset count must be at least twice the terminal size");
    }
    if (anchor_samples < 2 || observation_samples < 2) {
      throw Error(ErrorCode::InvalidConfig, "sample counts must be at least 2");
    }
    if (trials < 1) {
      throw Error(ErrorCode::InvalidConfig, "need at least one trial");
    }
    if (gamma_grid.empty() || std::find(gamma_grid.begin(), gamma_grid.end(), 0.0) == gamma_grid.end()) {
      throw Error(ErrorCode::InvalidConfig, "gamma grid must contain 0");
    }
    for (double g : gamma_grid) {
      if (!(g >= 0.0 && g <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "gamma " + std::to_string(g) + " outside [0, 1]");
      }
    }
    if (assets > 1 && !(rho > -1.0 / static_cast<double>(assets - 1) && rho < 1.0)) {
      throw Error(ErrorCode::InvalidRho, "rho outside the positive-definite range");
    }
  }
};

struct ExperimentRow {
  int trial = 0;
  double gamma = 0.0;
  /// w^T S_true w; NaN when the allocation failed.
  double oos_variance = 0.0;
  /// oos_variance divided by the same trial's gamma = 0 value.
  double normalized = 0.0;
};

struct TrialFailure {
  int trial = 0;
  double gamma = 0.0;
  std::string message;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<TrialFailure> failures;
};

struct SummaryRow {
  double gamma = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  std::size_t count = 0;
};

namespace detail {

struct TrialOutput {
  std::vector<ExperimentRow> rows;
  std::vector<TrialFailure> failures;
};

inline TrialOutput run_trial(const ExperimentConfig& config, int trial) {
  TrialOutput out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto fail_all = [&](const std::string& message) {
    for (double g : config.gamma_grid) {
      out.rows.push_back({trial, g, nan, nan});
      out.failures.push_back({trial, g, message});
    }
  };

  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(trial)));
  CovarianceMatrix truth, estimate;
  try {
    const CovarianceMatrix anchor = rand_symm_cov(config.assets, config.rho, rng, config.anchor);
    truth = empirical_covariance(sample_gaussian(anchor, config.anchor_samples, rng));
    estimate = empirical_covariance(sample_gaussian(truth, config.observation_samples, rng));
  } catch (const Error& e) {
    fail_all(e.what());
    return out;
  }

  std::vector<double> variances;
  variances.reserve(config.gamma_grid.size());
  for (double g : config.gamma_grid) {
    AllocationConfig alloc = config.allocation;
    alloc.gammas = GammaPair::uniform(g);
    try {
      const AllocationReport report = allocate(estimate, alloc);
      variances.push_back(portfolio_variance(truth, report.weights));
    } catch (const Error& e) {
      variances.push_back(nan);
      out.failures.push_back({trial, g, e.what()});
    }
  }
  const auto zero = std::find(config.gamma_grid.begin(), config.gamma_grid.end(), 0.0);
  const double base = variances[static_cast<std::size_t>(zero - config.gamma_grid.begin())];
  for (std::size_t i = 0; i < variances.size(); ++i) {
    out.rows.push_back({trial, config.gamma_grid[i], variances[i], variances[i] / base});
  }
  return out;
}

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Runs every trial; trial t draws from its own stream derive_seed(seed, t),
/// so the rows do not depend on scheduling. A failing allocation yields NaN
/// rows plus a failure record rather than aborting the run.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<detail::TrialOutput> outputs(static_cast<std::size_t>(config.trials));
  unsigned workers = config.threads != 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.trials));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next++; t < config.trials; t = next++) {
      outputs[static_cast<std::size_t>(t)] = detail::run_trial(config, t);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  ExperimentResult result;
  for (auto& out : outputs) {
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    result.failures.insert(result.failures.end(), out.failures.begin(), out.failures.end());
  }
  return result;
}

/// Per-gamma mean, median and 10/90% quantiles of the normalized variance,
/// ordered by gamma. Rows with NaN values are left out.
inline std::vector<SummaryRow> summarize(const ExperimentResult& result) {
  if (result.rows.empty()) {
    throw Error(ErrorCode::EmptyResult, "no experiment rows to summarize");
  }
  std::map<double, std::vector<double>> by_gamma;
  for (const auto& row : result.rows) {
    auto& bucket = by_gamma[row.gamma];
    if (std::isfinite(row.normalized)) bucket.push_back(row.normalized);
  }
  std::vector<SummaryRow> summary;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& [gamma, values] : by_gamma) {
    SummaryRow row{gamma, nan, nan, nan, nan, values.size()};
    if (!values.empty()) {
      std::sort(values.begin(), values.end());
      double total = 0.0;
      for (double v : values) total += v;
      row.mean = total / static_cast<double>(values.size());
      row.median = detail::quantile_sorted(values, 0.5);
      row.q10 = detail::quantile_sorted(values, 0.1);
      row.q90 = detail::quantile_sorted(values, 0.9);
    }
    summary.push_back(row);
  }
  return summary;
}

}  // namespace hmv
