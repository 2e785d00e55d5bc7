#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rcid/datagen.hpp"
#include "rcid/evalkit.hpp"
#include "rcid/ga_baseline.hpp"

using namespace rcid;

namespace {

GaConfig box(std::size_t dim, double lo, double hi) {
  GaConfig c;
  c.bounds.assign(dim, {lo, hi});
  return c;
}

}  // namespace

TEST(GaConfig, Validation) {
  auto c = box(2, 0.0, 1.0);
  EXPECT_NO_THROW(c.validate());
  c.population = 1;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = box(2, 0.0, 1.0);
  c.mutation_rate = 1.5;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = box(2, 1.0, 1.0);
  EXPECT_THROW(c.validate(), InvalidInput);
  c = box(2, 0.0, 1.0);
  c.elitism = c.population;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(GaMinimize, SphereConverges) {
  const std::vector<double> target{1.0, -2.0, 3.5, 0.25, -4.0};
  const auto sphere = [&](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - target[i]) * (x[i] - target[i]);
    return s;
  };
  const auto cfg = box(5, -5.0, 5.0);
  const auto r = ga_minimize(sphere, cfg, 17);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(r.best[i], target[i], 0.01 * 10.0);
  EXPECT_EQ(r.best_loss, sphere(r.best));
  EXPECT_EQ(r.best_per_generation.size(), cfg.generations + 1);
  for (std::size_t g = 1; g < r.best_per_generation.size(); ++g) {
    EXPECT_LE(r.best_per_generation[g], r.best_per_generation[g - 1]);
  }
}

TEST(GaMinimize, ConstantObjectiveStaysInBounds) {
  const auto cfg = box(3, 2.0, 4.0);
  std::size_t seen = 0;
  bool in_bounds = true;
  const auto r = ga_minimize([](std::span<const double>) { return 7.0; }, cfg, 3,
                             [&](std::span<const double> x) {
                               ++seen;
                               for (double v : x) in_bounds = in_bounds && v >= 2.0 && v <= 4.0;
                             });
  EXPECT_EQ(r.best_loss, 7.0);
  EXPECT_TRUE(in_bounds);
  EXPECT_EQ(seen, r.evaluations);
  for (double v : r.best) {
    EXPECT_GE(v, 2.0);
    EXPECT_LE(v, 4.0);
  }
}

TEST(GaMinimize, NonFiniteRanksLast) {
  const auto f = [](std::span<const double> x) { return x[0] < 0.5 ? NAN : x[0]; };
  const auto r = ga_minimize(f, box(1, 0.0, 1.0), 9);
  EXPECT_TRUE(std::isfinite(r.best_loss));
  EXPECT_NEAR(r.best[0], 0.5, 0.01);
}

TEST(GaMinimize, DeterministicInSeed) {
  const auto f = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[1] * x[1]; };
  const auto cfg = box(2, -2.0, 2.0);
  const auto a = ga_minimize(f, cfg, 5);
  const auto b = ga_minimize(f, cfg, 5);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best_per_generation, b.best_per_generation);
  EXPECT_NE(ga_minimize(f, cfg, 6).best_per_generation, a.best_per_generation);
}

TEST(TrajectoryMse, ZeroAtTruthOnNoiseFreeData) {
  DatasetOptions o;
  o.truth_override = ThermalParams::one_r_one_c(9.0, 7.0, 4.0);
  const auto s = generate_dataset(target_suite()[0], 3, 2, o);
  const auto v = o.truth_override->values();
  EXPECT_LT(trajectory_mse(s, Topology::OneROneC, v), 1e-18);
  const auto s2 = generate_dataset(target_suite()[0], 3, 2);
  EXPECT_LT(trajectory_mse(s2, Topology::TwoRTwoC, s2.truth->values()), 1e-18);
}

TEST(GaEstimate, RecoversNoiseFree1R1C) {
  DatasetOptions o;
  o.truth_override = ThermalParams::one_r_one_c(9.09, 8.0, 5.7);
  const auto s = generate_dataset(target_suite()[3], 60, 2024, o);
  const auto parts = split(s, {48, 12, 0.25});
  const auto est = ga_estimate(parts.train, Topology::OneROneC, GaConfig{}, 2, 7);
  const auto fc = rolling_forecast(est.theta_star, parts.test);
  EXPECT_LE(metrics(fc.predicted, fc.measured, value_range(parts.test.t_in)).rmse, 0.3);
}

TEST(GaEstimate, BestOfSeedsAndDeterminism) {
  const auto s = generate_dataset(target_suite()[1], 4, 5);
  GaConfig cfg;
  cfg.population = 12;
  cfg.generations = 6;
  const auto a = ga_estimate(s, Topology::TwoRTwoC, cfg, 4, 99);
  ASSERT_EQ(a.seeds.size(), 4u);
  double best = a.seeds[0].best_loss;
  std::size_t arg = 0;
  for (std::size_t i = 1; i < a.seeds.size(); ++i) {
    if (a.seeds[i].best_loss < best) {
      best = a.seeds[i].best_loss;
      arg = i;
    }
  }
  EXPECT_EQ(a.loss, best);
  const auto expected = a.seeds[arg].best;
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.theta_star[i], expected[i]);
  const auto b = ga_estimate(s, Topology::TwoRTwoC, cfg, 4, 99, 0, kDefaultSubsteps, 3);
  EXPECT_EQ(a.theta_star, b.theta_star);
}
