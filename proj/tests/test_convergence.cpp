#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "support.hpp"
#include "tamed/convergence.hpp"
#include "tamed/errors.hpp"

namespace tamed {
namespace {

TEST(LqError, Examples) {
  const std::vector<double> same{0.3, 0.3, 0.3};
  for (double q : {1.0, 2.0, 3.5}) EXPECT_DOUBLE_EQ(lq_error(same, q), 0.3);
  EXPECT_DOUBLE_EQ(lq_error(std::vector<double>{0.0, 2.0}, 2.0), std::sqrt(2.0));
  const std::vector<double> pair{0.1, 0.3};
  EXPECT_DOUBLE_EQ(lq_error(pair, 1.0), 0.2);
  EXPECT_NEAR(lq_error(pair, 2.0), 0.2236, 1e-4);
  EXPECT_LE(lq_error(pair, 1.0), lq_error(pair, 2.0));
}

TEST(LqError, DomainErrors) {
  EXPECT_THROW(lq_error(std::vector<double>{}, 2.0), DomainError);
  EXPECT_THROW(lq_error(std::vector<double>{1.0}, 0.5), DomainError);
  EXPECT_THROW(lq_error(std::vector<double>{-1.0}, 2.0), DomainError);
  EXPECT_THROW(lq_error(std::vector<double>{NAN}, 2.0), DomainError);
}

TEST(LqError, AllZeros) { EXPECT_EQ(lq_error(std::vector<double>{0.0, 0.0}, 3.0), 0.0); }

TEST(LqError, DegenerateSampleHasZeroHalfWidth) {
  const std::vector<double> c(50, 0.125);
  for (double q : {1.0, 2.0, 5.0}) {
    const MomentEstimate e = lq_error_with_ci(c, q);
    EXPECT_DOUBLE_EQ(e.value, 0.125);
    EXPECT_EQ(e.half_width, 0.0);
  }
}

TEST(LqError, DeltaMethodHalfWidth) {
  // q = 1: the half-width is z s / sqrt(M) of the sample itself.
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const double s = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  EXPECT_NEAR(lq_error_with_ci(v, 1.0).half_width, kConfidenceZ * s / 2.0, 1e-12);
  // q = 2: g(m) = sqrt(m) with m = mean(v^2) = 7.5, g'(m) = 1 / (2 sqrt(m)).
  const double sq_mean = 7.5;
  const double sq_sd = std::sqrt(((1 - 7.5) * (1 - 7.5) + (4 - 7.5) * (4 - 7.5) +
                                  (9 - 7.5) * (9 - 7.5) + (16 - 7.5) * (16 - 7.5)) /
                                 3.0);
  EXPECT_NEAR(lq_error_with_ci(v, 2.0).half_width,
              kConfidenceZ * sq_sd / 2.0 / (2.0 * std::sqrt(sq_mean)), 1e-12);
}

TEST(MeanWithCi, Basics) {
  const MomentEstimate e = mean_with_ci(std::vector<double>{1.0, 3.0});
  EXPECT_EQ(e.value, 2.0);
  EXPECT_NEAR(e.half_width, kConfidenceZ * std::sqrt(2.0) / std::sqrt(2.0), 1e-12);
  EXPECT_TRUE(std::isinf(mean_with_ci(std::vector<double>{1.0}).half_width));
}

ErrorTable geometric_table(double ratio, double q = 2.0) {
  ErrorTable t;
  double e = 0.5;
  for (int level = 3; level <= 8; ++level) {
    t.rows.push_back({level, std::ldexp(1.0, -level), q, e});
    e /= ratio;
  }
  return t;
}

TEST(FitRate, HalvingGivesOrderOne) {
  const RateFit f = fit_rate(geometric_table(2.0), 2.0);
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.levels_used.size(), 6u);
}

TEST(FitRate, QuarteringGivesOrderTwo) {
  EXPECT_NEAR(fit_rate(geometric_table(4.0), 2.0).slope, 2.0, 1e-12);
}

TEST(FitRate, ZeroErrorLevelsExcluded) {
  ErrorTable t = geometric_table(2.0);
  t.rows[2].error = 0.0;
  const RateFit f = fit_rate(t, 2.0);
  EXPECT_EQ(f.excluded_levels, std::vector<int>{5});
  EXPECT_NEAR(f.slope, 1.0, 1e-12);
}

TEST(FitRate, NeedsTwoLevels) {
  ErrorTable t;
  t.rows.push_back({4, 1.0 / 16, 2.0, 0.1});
  EXPECT_THROW(fit_rate(t, 2.0), DomainError);
  EXPECT_THROW(fit_rate(geometric_table(2.0), 3.0), DomainError);
}

TEST(FitRate, LongRunExample1Errors) {
  // Strong L^2 errors of the tamed Milstein scheme on example1, step 2^-11 .. 2^-20.
  const double l2[] = {0.0035802581, 0.0015293072, 0.0007232200, 0.0003519474, 0.0001723833,
                       0.0000844630, 0.0000408359, 0.0000190372, 0.0000081546, 0.0000027396};
  ErrorTable t;
  for (int i = 0; i < 10; ++i) t.rows.push_back({11 + i, std::ldexp(1.0, -(11 + i)), 2.0, l2[i]});
  const RateFit f = fit_rate(t, 2.0);
  // Frozen from an independent numpy least-squares fit.
  EXPECT_NEAR(f.slope, 1.1067488942903763, 1e-12);
  EXPECT_NEAR(f.intercept, 4.048622879099546, 1e-10);
  EXPECT_NEAR(f.r_squared, 0.9973014914844692, 1e-12);
  EXPECT_NEAR(f.slope, 1.0, 0.15);
}

ConvergenceConfig small_config() {
  ConvergenceConfig c;
  c.levels = {3, 4, 5};
  c.reference_level = 9;
  c.paths = 400;
  c.q_list = {1.0, 2.0, 4.0};
  c.master_seed = 42;
  c.kind = SchemeKind::TamedMilsteinContinuous;
  return c;
}

bool same_table(const ErrorTable& a, const ErrorTable& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const ErrorRow& x = a.rows[i];
    const ErrorRow& y = b.rows[i];
    if (x.level != y.level || x.paths_used != y.paths_used || x.diverged != y.diverged ||
        std::memcmp(&x.error, &y.error, sizeof(double)) != 0 ||
        std::memcmp(&x.half_width, &y.half_width, sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

TEST(ConvergenceConfig, Validation) {
  ConvergenceConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.reference_level = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.levels = {5, 4};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.paths = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.q_list = {0.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.levels.clear();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(StrongConvergence, TableShapeAndPowerMeanOrder) {
  const ErrorTable t = run_strong_convergence(builtin_problem("example1"), small_config());
  ASSERT_EQ(t.rows.size(), 9u);
  EXPECT_EQ(t.total_paths, 400u);
  for (int level : {3, 4, 5}) {
    const ErrorRow* e1 = t.find(level, 1.0);
    const ErrorRow* e2 = t.find(level, 2.0);
    const ErrorRow* e4 = t.find(level, 4.0);
    ASSERT_TRUE(e1 && e2 && e4);
    EXPECT_LE(e1->error, e2->error);
    EXPECT_LE(e2->error, e4->error);
    EXPECT_GT(e1->error, 0.0);
    EXPECT_EQ(e1->paths_used, 400u);
    EXPECT_EQ(e1->h, std::ldexp(1.0, -level));
  }
  EXPECT_EQ(t.column(2.0).size(), 3u);
}

TEST(StrongConvergence, WorkerCountInvariance) {
  const SdeProblem p = builtin_problem("example2-normal-λ5");
  ConvergenceConfig c = small_config();
  c.kind = SchemeKind::TamedMilsteinJump1D;
  c.paths = 300;
  c.workers = 1;
  const ErrorTable one = run_strong_convergence(p, c);
  c.workers = 2;
  const ErrorTable two = run_strong_convergence(p, c);
  c.workers = 8;
  const ErrorTable eight = run_strong_convergence(p, c);
  EXPECT_TRUE(same_table(one, two));
  EXPECT_TRUE(same_table(one, eight));
}

TEST(StrongConvergence, PathErrorsMatchDirectSimulation) {
  const SdeProblem p = builtin_problem("example2-uniform-λ5");
  ConvergenceConfig c = small_config();
  c.kind = SchemeKind::TamedMilsteinJump1D;
  const auto errors = coupled_path_errors(p, c, 17);
  const NoiseRealization n = sample_noise(p, c.reference_level, c.master_seed, 17);
  const double ref =
      simulate_path(p, SchemeSpec::make(c.kind, c.reference_level, 1.0), n).terminal_value[0];
  ASSERT_EQ(errors.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    const double x =
        simulate_path(p, SchemeSpec::make(c.kind, c.levels[l], 1.0), n).terminal_value[0];
    ASSERT_TRUE(errors[l]);
    EXPECT_EQ(*errors[l], std::abs(ref - x));
  }
  // The reference compared with itself on shared noise.
  EXPECT_EQ(
      simulate_path(p, SchemeSpec::make(c.kind, c.reference_level, 1.0), n).terminal_value[0],
      ref);
}

TEST(StrongConvergence, HalfWidthShrinksWithPaths) {
  const SdeProblem p = builtin_problem("example2-uniform-λ3");
  ConvergenceConfig c;
  c.levels = {4, 5};
  c.reference_level = 8;
  c.kind = SchemeKind::TamedMilsteinJump1D;
  c.master_seed = 3;
  c.paths = 4000;
  const ErrorTable small = run_strong_convergence(p, c);
  c.paths = 8000;
  const ErrorTable large = run_strong_convergence(p, c);
  for (int level : {4, 5}) {
    const double ratio = large.find(level, 2.0)->half_width / small.find(level, 2.0)->half_width;
    EXPECT_GT(ratio, 1.0 / std::sqrt(2.0) - 0.15) << level;
    EXPECT_LT(ratio, 1.0 / std::sqrt(2.0) + 0.15) << level;
  }
}

TEST(StrongConvergence, TamedDivergenceFailsLoudly) {
  const SdeProblem wild = testing::scalar_sde(
      "wild", [](double x) { return -x * x * x; }, [](double x) { return 30.0 * x; },
      [](double) { return 30.0; });
  ConvergenceConfig c = small_config();
  c.paths = 200;
  EXPECT_THROW(run_strong_convergence(wild, c), DivergenceError);
}

TEST(StrongConvergence, IncompatibleSchemeRejected) {
  ConvergenceConfig c = small_config();
  EXPECT_THROW(run_strong_convergence(builtin_problem("example2-normal-λ3"), c), UnsupportedScheme);
}

TEST(MomentSweep, DeterministicProblemIsExact) {
  const SdeProblem still = testing::scalar_sde(
      "still", [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
      -1.5);
  const auto rows = moment_sweep(still, SchemeKind::TamedMilsteinContinuous, {2, 4}, 3.0, 50, 1);
  for (const auto& r : rows) {
    EXPECT_EQ(r.moment, std::pow(1.5, 3.0));
    EXPECT_EQ(r.half_width, 0.0);
  }
}

TEST(MomentSweep, TamedMomentsStayBounded) {
  const auto rows = moment_sweep(builtin_problem("example1"), SchemeKind::TamedMilsteinContinuous,
                                 {4, 5, 6, 7, 8, 9, 10, 11, 12}, 2.0, 2000, 5);
  double lo = INFINITY, hi = 0.0, worst_hw = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.moment);
    hi = std::max(hi, r.moment);
    worst_hw = std::max(worst_hw, r.half_width);
    EXPECT_EQ(r.diverged, 0u);
  }
  EXPECT_LE(hi, 2.0 * lo + 4.0 * worst_hw);
}

TEST(MomentSweep, UntamedDivergesFromLargeStart) {
  const SdeProblem p = builtin_problem("example1").with_initial_value({3.0});
  const auto rows = moment_sweep(p, SchemeKind::UntamedMilstein, {4}, 2.0, 10000, 42);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_GE(rows[0].diverged, 1u);
  EXPECT_EQ(rows[0].paths_used + rows[0].diverged, 10000u);
}

}  // namespace
}  // namespace tamed
