#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rcid/datagen.hpp"
#include "rcid/evalkit.hpp"

using namespace rcid;

namespace {

BuildingSeries indexed_series(std::size_t days) {
  BuildingSeries s;
  for (std::size_t k = 0; k < days * kSamplesPerDay; ++k) {
    s.t_in.push_back(20.0);
    s.t_out.push_back(static_cast<double>(k));
    s.q_solar.push_back(0.0);
    s.u_heat.push_back(0.0);
  }
  return s;
}

}  // namespace

TEST(Split, BlocksAndValidationTail) {
  const auto s = indexed_series(60);
  const auto p = split(s, {48, 12, 0.25});
  EXPECT_EQ(p.train.size(), 48u * 96u);
  EXPECT_EQ(p.test.size(), 12u * 96u);
  EXPECT_EQ(p.validation.size(), 12u * 96u);
  EXPECT_EQ(p.validation.t_out.front(), 36.0 * 96);
  EXPECT_EQ(p.validation.t_out.back(), p.train.t_out.back());
  EXPECT_EQ(p.test.t_out.front(), p.train.t_out.back() + 1);
  EXPECT_EQ(p.test.start_epoch, s.start_epoch + 48 * 96 * 900);
  EXPECT_THROW(split(s, {72, 12, 0.25}), InvalidInput);
}

TEST(Split, TestBlockFixedAcrossLengths) {
  const auto s = indexed_series(90);
  for (std::size_t d : {12u, 24u, 48u, 72u}) {
    const auto p = split(s, {d, 12, 0.25});
    EXPECT_EQ(p.test.size(), 12u * 96u);
    EXPECT_EQ(p.train.size(), d * 96u);
  }
}

TEST(RollingForecast, OriginCount) {
  const auto s = generate_dataset(target_suite()[0], 2, 1);
  const auto p = *s.truth;
  EXPECT_EQ(rolling_forecast(p, s.slice(0, 97)).origins, 1u);
  const auto fc = rolling_forecast(p, s.slice(0, 150));
  EXPECT_EQ(fc.origins, 150u - 96u);
  EXPECT_EQ(fc.predicted.size(), fc.origins * 96u);
  EXPECT_EQ(rolling_forecast(p, s.slice(0, 150), 96, 10).origins, 6u);
  EXPECT_THROW(rolling_forecast(p, s.slice(0, 96)), InvalidInput);
}

TEST(RollingForecast, ClosureFor1R1CTruth) {
  DatasetOptions o;
  o.truth_override = ThermalParams::one_r_one_c(8.0, 6.0, 3.0);
  const auto s = generate_dataset(target_suite()[1], 4, 2, o);
  const auto fc = rolling_forecast(*o.truth_override, s);
  for (std::size_t i = 0; i < fc.predicted.size(); ++i) {
    EXPECT_NEAR(fc.predicted[i], fc.measured[i], 1e-6);
  }
}

TEST(RollingForecast, MeasuredMatchesSeries) {
  const auto s = generate_dataset(target_suite()[1], 2, 2);
  const auto fc = rolling_forecast(*s.truth, s);
  for (std::size_t o = 0; o < fc.origins; o += 17) {
    for (std::size_t h = 0; h < 96; ++h) {
      EXPECT_EQ(fc.measured[o * 96 + h], s.t_in[fc.origin_index[o] + h + 1]);
    }
  }
}

TEST(Metrics, Examples) {
  const std::vector<double> t{0.0, 1.0, 2.0, 4.0};
  const auto m0 = metrics(t, t, value_range(t));
  EXPECT_EQ(m0.rmse, 0.0);
  EXPECT_EQ(m0.mae, 0.0);
  EXPECT_EQ(m0.nrmse, 0.0);
  std::vector<double> off = t;
  for (auto& v : off) v += 0.5;
  const auto m1 = metrics(off, t, value_range(t));
  EXPECT_EQ(m1.rmse, 0.5);
  EXPECT_EQ(m1.mae, 0.5);
  const std::vector<double> alt{1.0, 0.0, 3.0, 3.0};
  const auto m2 = metrics(alt, t, 4.0);
  EXPECT_EQ(m2.rmse, 1.0);
  EXPECT_EQ(m2.mae, 1.0);
  EXPECT_EQ(m2.nrmse, 0.25);
  EXPECT_THROW(metrics(alt, std::vector<double>{1.0}, 1.0), InvalidInput);
}

TEST(RelImprovement, QuotedFigures) {
  EXPECT_NEAR(rel_improvement(1.177, 0.895), 0.2396, 5e-5);
  EXPECT_NEAR(rel_improvement(1.100, 0.895), 0.1864, 5e-5);
  EXPECT_NEAR(rel_improvement(1.153, 0.584), 0.4935, 5e-5);
  EXPECT_THROW(rel_improvement(0.0, 1.0), InvalidInput);
}

TEST(Method, ParseNames) {
  EXPECT_EQ(parse_method("scratch"), Method::Scratch);
  EXPECT_EQ(parse_method("pretrained"), Method::Pretrained);
  EXPECT_EQ(parse_method("finetune"), Method::Pretrained);
  EXPECT_EQ(parse_method("ga"), Method::Ga);
  EXPECT_THROW(parse_method("sgd"), InvalidInput);
}

namespace {

SweepConfig tiny_sweep() {
  SweepConfig c;
  c.methods = {Method::Ga};
  c.topologies = {Topology::OneROneC};
  c.train_days = {2};
  c.test_days = 2;
  c.ga.population = 8;
  c.ga.generations = 3;
  c.ga_seeds = 2;
  c.master_seed = 4;
  return c;
}

}  // namespace

TEST(Sweep, SingleCell) {
  const auto s = generate_dataset(target_suite()[0], 4, 1);
  const SweepBuilding b[] = {{"T1", &s}};
  const auto r = sweep(b, tiny_sweep());
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_TRUE(r.all_ok());
  ASSERT_EQ(r.aggregates.size(), 1u);
  EXPECT_EQ(r.aggregates[0].rmse, r.cells[0].metrics.rmse);
  const auto csv = report_to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Sweep, FactorialRowCountAndDeterminism) {
  const auto s = generate_dataset(target_suite()[0], 10, 1);
  const SweepBuilding b[] = {{"T1", &s}};
  auto c = tiny_sweep();
  c.topologies = {Topology::OneROneC, Topology::TwoRTwoC};
  c.train_days = {2, 3, 4, 5};
  const auto r = sweep(b, c);
  EXPECT_EQ(r.cells.size(), 8u);
  const auto csv = report_to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  c.workers = 3;
  const auto r2 = sweep(b, c);
  EXPECT_EQ(report_to_json(r2), report_to_json(r));
  EXPECT_EQ(report_to_csv(r2), csv);
}

TEST(Sweep, FailingCellIsRecorded) {
  const auto s = generate_dataset(target_suite()[0], 4, 1);
  const SweepBuilding b[] = {{"T1", &s}};
  auto c = tiny_sweep();
  c.train_days = {2, 30};
  c.methods = {Method::Ga, Method::Pretrained};
  const auto r = sweep(b, c);
  ASSERT_EQ(r.cells.size(), 4u);
  EXPECT_FALSE(r.all_ok());
  std::size_t failed = 0;
  for (const auto& cell : r.cells) {
    if (!cell.ok) {
      ++failed;
      EXPECT_FALSE(cell.error.empty());
    }
  }
  EXPECT_EQ(failed, 3u);
  EXPECT_NE(report_to_csv(r).find("nan"), std::string::npos);
}

TEST(Report, JsonRoundTripAndImprovements) {
  EvalReport r;
  r.master_seed = 9;
  r.config_hash = "00ff00ff00ff00ff";
  r.seeds = 8;
  for (const auto m : {Method::Ga, Method::Pretrained}) {
    CellResult c;
    c.building = "T1";
    c.method = m;
    c.topology = Topology::OneROneC;
    c.train_days = 12;
    c.ok = true;
    c.metrics = {m == Method::Ga ? 1.177 : 0.895, 0.1, 0.7};
    r.cells.push_back(c);
  }
  summarize(r);
  bool found = false;
  for (const auto& imp : r.improvements) {
    if (imp.model == Method::Pretrained && imp.benchmark == Method::Ga) {
      EXPECT_NEAR(imp.value, 0.2396, 5e-5);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  const auto text = report_to_json(r);
  const auto back = report_from_json(text);
  EXPECT_EQ(report_to_json(back), text);
  EXPECT_EQ(back.config_hash, r.config_hash);
  EXPECT_EQ(back.cells.size(), 2u);
}
