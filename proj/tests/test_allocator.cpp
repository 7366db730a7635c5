#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace hmv {
namespace {

using testing::brute_min_var;
using testing::equicorrelated;

AllocationConfig three_asset_config(AllocationMode mode) {
  AllocationConfig c;
  c.mode = mode;
  c.terminal_size = 2;
  c.fitness = FitnessKind::minvar_variance;
  c.terminal = TerminalMethod::minvar;
  return c;
}

AllocationConfig exact_config(Index m) {
  AllocationConfig c;
  c.mode = AllocationMode::schur_debiased;
  c.gammas = GammaPair::uniform(1.0);
  c.fitness = FitnessKind::minvar_variance;
  c.terminal = TerminalMethod::minvar;
  c.terminal_size = m;
  c.adaptive_cap = false;
  return c;
}

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

TEST(Allocate, GoldenThreeAssetVectors) {
  const auto c = testing::equi3();
  EXPECT_TRUE(allocate(c, three_asset_config(AllocationMode::hrp)).weights.values.isApprox(
      vec({2.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0}), 1e-12));
  EXPECT_TRUE(allocate(c, three_asset_config(AllocationMode::schur_literal)).weights.values.isApprox(
      vec({0.375, 0.375, 0.25}), 1e-12));
  EXPECT_TRUE(allocate(c, three_asset_config(AllocationMode::schur_debiased)).weights.values.isApprox(
      Vector::Constant(3, 1.0 / 3.0), 1e-12));
}

TEST(Allocate, IdentityGivesEqualWeights) {
  const CovarianceMatrix id(Matrix::Identity(9, 9));
  for (auto mode : {AllocationMode::hrp, AllocationMode::schur_literal, AllocationMode::schur_debiased}) {
    for (Index m : {1, 2, 5}) {
      AllocationConfig c;
      c.mode = mode;
      c.terminal_size = m;
      EXPECT_TRUE(allocate(id, c).weights.values.isApprox(Vector::Constant(9, 1.0 / 9.0), 1e-14));
    }
  }
}

TEST(Allocate, SingleAsset) {
  const auto r = allocate(CovarianceMatrix(Matrix::Constant(1, 1, 2.0)));
  EXPECT_EQ(r.weights.values, Vector::Ones(1));
  EXPECT_TRUE(r.splits.empty());
  EXPECT_EQ(r.portfolio_variance, 2.0);
}

TEST(Allocate, ZeroGammaIsBitIdenticalToHrp) {
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 4 + static_cast<Index>(trial % 13);
    const auto c = testing::random_spd(n, rng);
    for (auto fit : {FitnessKind::minvar_variance, FitnessKind::subportfolio_variance}) {
      AllocationConfig hrp;
      hrp.mode = AllocationMode::hrp;
      hrp.fitness = fit;
      hrp.terminal_size = 1 + trial % 3;
      AllocationConfig zero = hrp;
      zero.gammas = GammaPair::uniform(0.0);
      for (auto mode : {AllocationMode::schur_literal, AllocationMode::schur_debiased}) {
        zero.mode = mode;
        EXPECT_EQ(allocate(c, zero).weights.values, allocate(c, hrp).weights.values);
      }
    }
  }
}

TEST(Allocate, HrpIgnoresGamma) {
  const auto c = testing::mixed4();
  AllocationConfig a = three_asset_config(AllocationMode::hrp);
  AllocationConfig b = a;
  b.gammas = GammaPair::uniform(0.3);
  EXPECT_EQ(allocate(c, a).weights.values, allocate(c, b).weights.values);
  EXPECT_EQ(b.effective_gammas().gamma_c, 0.0);
}

TEST(Allocate, PropertyDebiasedFullGammaIsExactMinimumVariance) {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 4 + static_cast<Index>(trial % 13);
    const Index m = 1 + static_cast<Index>(trial % 3);
    const auto c = testing::random_spd(n, rng);
    const auto r = allocate(c, exact_config(m));
    EXPECT_LT((r.weights.values - brute_min_var(c.values())).cwiseAbs().maxCoeff(), 1e-8)
        << "n=" << n << " m=" << m;
  }
}

TEST(Allocate, MixedSignExampleIsExact) {
  // Minimum eigenvalue is about 8e-10, so agreement is limited by conditioning.
  const auto c = testing::mixed4();
  const Vector expect = vec({-9.00833503582, -6.871257040869, 8.749518793023, 8.130073283666});
  for (Index m : {1, 2, 3}) {
    EXPECT_LT((allocate(c, exact_config(m)).weights.values - expect).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(Allocate, LiteralModeIsNotExact) {
  AllocationConfig c = exact_config(2);
  c.mode = AllocationMode::schur_literal;
  const auto w = allocate(testing::equi3(), c).weights.values;
  EXPECT_GT((w - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 0.01);
}

TEST(AllocateExact, EverySplitPointRecoversInverse) {
  Rng rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(trial % 9);
    const auto q = testing::random_spd(n, rng);
    Vector b(n);
    for (Index i = 0; i < n; ++i) b(i) = 0.2 + rng.uniform();
    const Vector truth = q.values().inverse() * b;
    for (Index k = 1; k < n; ++k) {
      for (Index m : {1, 2, 3}) {
        const auto s = allocate_exact(q, b, GammaPair{1.0, 1.0}, m, k);
        EXPECT_LT((s.values - truth).cwiseAbs().maxCoeff(), 1e-9 * truth.cwiseAbs().maxCoeff());
        EXPECT_NEAR(b.dot(s.weights.values), 1.0, 1e-12);
      }
    }
  }
}

TEST(AllocateExact, MixedSignExample) {
  const auto s = allocate_exact(testing::mixed4(), Vector::Ones(4), GammaPair{1.0, 1.0}, 1);
  const Vector expect = vec({-9.00833503582, -6.871257040869, 8.749518793023, 8.130073283666});
  EXPECT_LT((s.weights.values - expect).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(AllocateExact, Errors) {
  const auto q = testing::equi3();
  EXPECT_THROW(allocate_exact(q, Vector::Ones(2), GammaPair{}, 1), Error);
  EXPECT_THROW(allocate_exact(q, Vector::Ones(3), GammaPair{}, 0), Error);
  EXPECT_THROW(allocate_exact(q, Vector::Ones(3), GammaPair{}, 1, 3), Error);
  try {
    allocate_exact(q, Vector::Zero(3), GammaPair{}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConstraint);
  }
}

TEST(Allocate, PropertyScaleInvariant) {
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 4 + static_cast<Index>(trial % 13);
    const auto c = testing::random_spd(n, rng);
    const CovarianceMatrix scaled(c.values() * 37.0);
    for (double g : {0.0, 0.5, 1.0}) {
      AllocationConfig cfg;
      cfg.gammas = GammaPair::uniform(g);
      cfg.terminal_size = 2;
      EXPECT_LT((allocate(c, cfg).weights.values - allocate(scaled, cfg).weights.values).cwiseAbs().maxCoeff(),
                1e-10);
    }
  }
}

TEST(Allocate, PropertyPermutationEquivariant) {
  Rng rng(65);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 4 + static_cast<Index>(trial % 13);
    const auto c = testing::random_spd(n, rng);
    const auto p = testing::random_permutation(n, rng);
    for (auto mode : {AllocationMode::hrp, AllocationMode::schur_debiased}) {
      AllocationConfig cfg;
      cfg.mode = mode;
      cfg.gammas = GammaPair::uniform(0.7);
      cfg.terminal_size = 2;
      const Vector base = allocate(c, cfg).weights.values;
      const Vector moved = allocate(apply_permutation(c, p), cfg).weights.values;
      EXPECT_LT((apply_permutation(base, p) - moved).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Allocate, GammaImprovesInSampleVarianceOnEquicorrelation) {
  for (double rho : {0.2, 0.5, 0.8}) {
    const CovarianceMatrix c(equicorrelated(3, rho));
    double previous = INFINITY;
    for (int i = 0; i <= 10; ++i) {
      AllocationConfig cfg = three_asset_config(AllocationMode::schur_debiased);
      cfg.gammas = GammaPair::uniform(0.1 * i);
      const double v = allocate(c, cfg).portfolio_variance;
      EXPECT_LE(v, previous + 1e-15) << "rho=" << rho << " gamma=" << 0.1 * i;
      previous = v;
    }
    EXPECT_NEAR(previous, (1.0 + 2.0 * rho) / 3.0, 1e-14);
  }
}

TEST(Allocate, DiagonalFitnessIgnoresCorrelation) {
  Matrix m = Matrix::Identity(4, 4);
  m(0, 1) = m(1, 0) = 0.9;
  const CovarianceMatrix c(m);
  AllocationConfig cfg;
  cfg.mode = AllocationMode::hrp;
  cfg.terminal_size = 2;
  cfg.seriation = SeriationMethod::identity;
  cfg.fitness = FitnessKind::diag_sum_squares;
  const Vector naive = allocate(c, cfg).weights.values;
  EXPECT_NEAR(naive.head(2).sum(), 0.5, 1e-15);
  cfg.fitness = FitnessKind::minvar_variance;
  const Vector aware = allocate(c, cfg).weights.values;
  EXPECT_NEAR(aware.head(2).sum(), (1.0 / 0.95) / (1.0 / 0.95 + 2.0), 1e-14);
  EXPECT_LT(portfolio_variance(c, aware), portfolio_variance(c, naive));
}

TEST(Allocate, WeightsComeBackInCallerOrder) {
  Rng rng(66);
  const auto c = testing::random_spd(11, rng);
  AllocationConfig cfg = exact_config(2);
  const auto r = allocate(c, cfg);
  EXPECT_FALSE(r.seriation.is_identity());
  const Vector ordered = allocate(apply_permutation(c, r.seriation), [&] {
                           auto x = cfg;
                           x.seriation = SeriationMethod::identity;
                           return x;
                         }()).weights.values;
  EXPECT_EQ(apply_inverse_permutation(ordered, r.seriation), r.weights.values);
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
}

TEST(Allocate, DiagnosticsDescribeEverySplit) {
  Rng rng(67);
  const auto c = testing::random_spd(12, rng);
  AllocationConfig cfg;
  cfg.terminal_size = 3;
  const auto r = allocate(c, cfg);
  // 12 -> 6 + 6 -> (3 + 3) x 2
  ASSERT_EQ(r.splits.size(), 3u);
  for (const auto& d : r.splits) {
    EXPECT_GT(d.nu_a, 0.0);
    EXPECT_GT(d.nu_d, 0.0);
    EXPECT_LE(d.gamma_c, 1.0);
    EXPECT_EQ(d.split_index, (d.size + 1) / 2);
  }
  EXPECT_NEAR(r.portfolio_variance, portfolio_variance(c, r.weights), 1e-15);
}

TEST(Allocate, AdaptiveCapEngagesOnNegativeBVectors) {
  AllocationConfig cfg;
  cfg.terminal_size = 1;
  const auto r = allocate(testing::mixed4(), cfg);
  EXPECT_TRUE(r.weights.values.allFinite());
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
  bool capped = false;
  for (const auto& d : r.splits) {
    capped = capped || d.gamma_cap < 1.0;
    EXPECT_GE(std::min(d.b_a_min, d.b_d_min), cfg.tolerances.eps_b);
  }
  EXPECT_TRUE(capped);
}

TEST(Allocate, DuplicateAssetsFailWithMinimumVarianceFitness) {
  // A duplicated pair makes every Schur complement of its block singular,
  // so no gamma rescues a minimum-variance fitness.
  Matrix m(4, 4);
  m << 1.0, 1.0, 0.3, 0.2,  //
      1.0, 1.0, 0.3, 0.2,   //
      0.3, 0.3, 1.0, 0.4,   //
      0.2, 0.2, 0.4, 1.0;
  AllocationConfig cfg;
  cfg.terminal_size = 1;
  try {
    allocate(CovarianceMatrix(m), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularCovariance);
  }
  cfg.fitness = FitnessKind::subportfolio_variance;
  const auto r = allocate(CovarianceMatrix(m), cfg);
  EXPECT_TRUE(r.weights.values.allFinite());
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
}

TEST(Allocate, RejectsBadInput) {
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = 0.0;
  try {
    allocate(CovarianceMatrix(m));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
  }
  AllocationConfig cfg;
  cfg.terminal_size = 0;
  EXPECT_THROW(allocate(testing::equi3(), cfg), Error);
  cfg = {};
  cfg.gammas = GammaPair{1.5, 1.0};
  EXPECT_THROW(allocate(testing::equi3(), cfg), Error);
}

TEST(Allocate, EnumNamesRoundTrip) {
  for (auto mode : {AllocationMode::hrp, AllocationMode::schur_literal, AllocationMode::schur_debiased}) {
    EXPECT_EQ(parse_allocation_mode(to_string(mode)), mode);
  }
  for (auto t : {TerminalMethod::minvar, TerminalMethod::weak_minvar, TerminalMethod::equal_weight,
                 TerminalMethod::inverse_variance}) {
    EXPECT_EQ(parse_terminal_method(to_string(t)), t);
  }
  EXPECT_THROW(parse_allocation_mode("schur"), Error);
}

}  // namespace
}  // namespace hmv
