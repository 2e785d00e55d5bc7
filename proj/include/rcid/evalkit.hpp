#pragma once

// Evaluation protocol: chronological splits, dense 24-hour rolling forecasts,
// pooled error metrics, relative improvements and the sweep harness.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcid/estimator_net.hpp"
#include "rcid/ga_baseline.hpp"
#include "rcid/rc_models.hpp"
#include "rcid/series.hpp"
#include "rcid/training.hpp"

namespace rcid {

inline constexpr std::size_t kForecastHorizon = 96;

struct SplitSpec {
  std::size_t train_days = 12;
  std::size_t test_days = 12;
  double validation_fraction = 0.25;
};

struct SplitResult {
  BuildingSeries train;       // full training block
  BuildingSeries validation;  // chronological tail of the training block
  BuildingSeries test;        // immediately after the training block
};

SplitResult split(const BuildingSeries& series, const SplitSpec& spec);

// One row of `horizon` predicted T_in values per origin t, for
// t = 0, stride, ... while t + horizon < test length. Row t holds the
// predictions for samples t+1 .. t+horizon.
struct ForecastMatrix {
  std::size_t origins = 0;
  std::size_t horizon = 0;
  std::vector<std::size_t> origin_index;
  std::vector<double> predicted;  // origins x horizon, row-major
  std::vector<double> measured;   // same layout

  double pred(std::size_t o, std::size_t h) const { return predicted[o * horizon + h]; }
};

ForecastMatrix rolling_forecast(const ThermalParams& params, const BuildingSeries& test,
                                std::size_t horizon = kForecastHorizon, std::size_t stride = 1,
                                int substeps = kDefaultSubsteps);

struct Metrics {
  double rmse = 0.0;
  double nrmse = 0.0;
  double mae = 0.0;
};

// Pooled over every element. `range` is max - min of the test-set T_in; a
// zero range yields nrmse = +inf unless the rmse is also zero.
Metrics metrics(std::span<const double> predicted, std::span<const double> truth, double range);

double value_range(std::span<const double> v);

// (benchmark - model) / benchmark.
double rel_improvement(double rmse_benchmark, double rmse_model);

enum class Method { Scratch, Pretrained, Ga };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct CellResult {
  std::string building;
  Method method = Method::Scratch;
  Topology topology = Topology::OneROneC;
  std::size_t train_days = 0;
  bool ok = false;
  std::string error;
  Metrics metrics;
  std::optional<ThermalParams> theta;
};

struct Aggregate {
  Method method;
  Topology topology;
  std::size_t train_days;
  std::size_t buildings;
  double rmse;
  double nrmse;
  double mae;
};

struct Improvement {
  Topology topology;
  std::size_t train_days;
  Method model;
  Method benchmark;
  double value;
};

struct EvalReport {
  std::vector<CellResult> cells;
  std::vector<Aggregate> aggregates;
  std::vector<Improvement> improvements;
  // Run metadata.
  std::uint64_t master_seed = 0;
  std::string config_hash;
  std::size_t seeds = 0;
  std::size_t horizon = kForecastHorizon;
  std::string pooling = "pooled";  // all origin-step errors form one population

  bool all_ok() const;
};

// Unweighted means across buildings of the successful cells, and the
// pairwise relative improvements of every available method pair.
void summarize(EvalReport& report);

struct SweepBuilding {
  std::string name;
  const BuildingSeries* series = nullptr;
};

struct SweepConfig {
  std::vector<Method> methods{Method::Scratch, Method::Pretrained, Method::Ga};
  std::vector<Topology> topologies{Topology::OneROneC, Topology::TwoRTwoC};
  std::vector<std::size_t> train_days{12, 24, 48, 72};
  std::size_t test_days = 12;
  std::size_t horizon = kForecastHorizon;
  EstimatorConfig estimator{};
  GaConfig ga{};
  std::size_t ga_seeds = 8;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  // Pretrained nets per topology; required for Method::Pretrained cells.
  std::map<Topology, const EstimatorNet*> pretrained;
};

// Estimates parameters for one cell on the training block.
ThermalParams estimate_cell(const BuildingSeries& train, Method method, Topology topo,
                            const SweepConfig& cfg, std::uint64_t building_id);

// Full factorial over buildings x methods x topologies x train_days.
// Failing cells are recorded with ok = false; the sweep itself does not throw.
EvalReport sweep(std::span<const SweepBuilding> buildings, const SweepConfig& cfg);

// Serialization. Both forms are deterministic for a given report.
std::string report_to_json(const EvalReport& report);
// Header: building,method,topology,train_days,rmse,nrmse,mae
std::string report_to_csv(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace rcid
