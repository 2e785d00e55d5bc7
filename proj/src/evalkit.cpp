#include "rcid/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "rcid/log.hpp"
#include "rcid/parallel.hpp"

namespace rcid {

SplitResult split(const BuildingSeries& series, const SplitSpec& spec) {
  if (spec.train_days == 0 || spec.test_days == 0) {
    throw InvalidInput("split: train and test days must be >= 1");
  }
  if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0)) {
    throw InvalidInput("split: validation fraction must lie in [0, 1)");
  }
  const std::size_t train = spec.train_days * kSamplesPerDay;
  const std::size_t test = spec.test_days * kSamplesPerDay;
  if (series.size() < train + test) {
    throw InvalidInput("split: series covers " + std::to_string(series.size()) +
                       " samples, need " + std::to_string(train + test) + " (" +
                       std::to_string(spec.train_days) + " + " + std::to_string(spec.test_days) +
                       " days)");
  }
  const auto val = static_cast<std::size_t>(
      std::floor(spec.validation_fraction * static_cast<double>(train)));
  SplitResult out;
  out.train = series.slice(0, train);
  out.validation = series.slice(train - val, val);
  out.test = series.slice(train, test);
  return out;
}

ForecastMatrix rolling_forecast(const ThermalParams& params, const BuildingSeries& test,
                                std::size_t horizon, std::size_t stride, int substeps) {
  if (horizon == 0) throw InvalidInput("rolling_forecast: horizon must be >= 1");
  if (stride == 0) throw InvalidInput("rolling_forecast: stride must be >= 1");
  if (test.size() < horizon + 1) {
    throw InvalidInput("rolling_forecast: test series has " + std::to_string(test.size()) +
                       " samples, need at least " + std::to_string(horizon + 1));
  }
  const Topology topo = params.topology();
  ForecastMatrix m;
  m.horizon = horizon;
  std::vector<double> traj;
  for (std::size_t t = 0; t + horizon < test.size(); t += stride) {
    kernel::simulate_from_origin<double>(topo, params.values(), test.t_in[t],
                                         test.forcings(t, horizon), horizon, substeps, traj);
    m.origin_index.push_back(t);
    m.predicted.insert(m.predicted.end(), traj.begin() + 1, traj.end());
    m.measured.insert(m.measured.end(), test.t_in.begin() + static_cast<std::ptrdiff_t>(t + 1),
                      test.t_in.begin() + static_cast<std::ptrdiff_t>(t + 1 + horizon));
  }
  m.origins = m.origin_index.size();
  return m;
}

double value_range(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("value_range: empty input");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

Metrics metrics(std::span<const double> predicted, std::span<const double> truth, double range) {
  if (predicted.empty()) throw InvalidInput("metrics: empty prediction set");
  if (predicted.size() != truth.size()) throw InvalidInput("metrics: shape mismatch");
  if (!(range >= 0.0)) throw InvalidInput("metrics: range must be >= 0");
  double sq = 0.0;
  double ab = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - truth[i];
    sq += e * e;
    ab += std::abs(e);
  }
  const double n = static_cast<double>(predicted.size());
  Metrics m;
  m.rmse = std::sqrt(sq / n);
  m.mae = ab / n;
  if (range > 0.0) {
    m.nrmse = m.rmse / range;
  } else {
    m.nrmse = m.rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return m;
}

double rel_improvement(double rmse_benchmark, double rmse_model) {
  if (!(rmse_benchmark > 0.0)) throw InvalidInput("rel_improvement: benchmark RMSE must be > 0");
  return (rmse_benchmark - rmse_model) / rmse_benchmark;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Scratch: return "scratch";
    case Method::Pretrained: return "pretrained";
    case Method::Ga: return "ga";
  }
  return "unknown";
}

Method parse_method(std::string_view s) {
  if (s == "scratch") return Method::Scratch;
  if (s == "pretrained" || s == "finetune") return Method::Pretrained;
  if (s == "ga") return Method::Ga;
  throw InvalidInput("unknown method '" + std::string(s) + "' (expected scratch, pretrained or ga)");
}

bool EvalReport::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

void summarize(EvalReport& report) {
  report.aggregates.clear();
  report.improvements.clear();
  using Key = std::tuple<Topology, std::size_t, Method>;
  std::map<Key, Aggregate> acc;
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    auto [it, fresh] =
        acc.try_emplace(Key{c.topology, c.train_days, c.method},
                        Aggregate{c.method, c.topology, c.train_days, 0, 0.0, 0.0, 0.0});
    Aggregate& a = it->second;
    ++a.buildings;
    a.rmse += c.metrics.rmse;
    a.nrmse += c.metrics.nrmse;
    a.mae += c.metrics.mae;
  }
  for (auto& [key, a] : acc) {
    const double n = static_cast<double>(a.buildings);
    a.rmse /= n;
    a.nrmse /= n;
    a.mae /= n;
    report.aggregates.push_back(a);
  }
  const std::pair<Method, Method> pairs[] = {{Method::Pretrained, Method::Ga},
                                             {Method::Pretrained, Method::Scratch},
                                             {Method::Scratch, Method::Ga}};
  for (const auto& [key, a] : acc) {
    const auto& [topo, days, method] = key;
    for (const auto& [model, bench] : pairs) {
      if (method != model) continue;
      const auto b = acc.find(Key{topo, days, bench});
      if (b == acc.end() || !(b->second.rmse > 0.0)) continue;
      report.improvements.push_back(
          {topo, days, model, bench, rel_improvement(b->second.rmse, a.rmse)});
    }
  }
}

ThermalParams estimate_cell(const BuildingSeries& train, Method method, Topology topo,
                            const SweepConfig& cfg, std::uint64_t building_id) {
  switch (method) {
    case Method::Scratch:
      return train_from_scratch(train, topo, cfg.estimator, cfg.master_seed, building_id)
          .theta_star;
    case Method::Pretrained: {
      const auto it = cfg.pretrained.find(topo);
      if (it == cfg.pretrained.end() || it->second == nullptr) {
        throw InvalidInput("no pretrained " + std::string(to_string(topo)) + " net available");
      }
      if (it->second->topology() != topo) {
        throw InvalidInput("pretrained net topology does not match the cell");
      }
      return finetune(*it->second, train, cfg.estimator, cfg.master_seed, building_id)
          .theta_star;
    }
    case Method::Ga:
      return ga_estimate(train, topo, cfg.ga, cfg.ga_seeds, cfg.master_seed, building_id,
                         cfg.estimator.substeps)
          .theta_star;
  }
  throw InvalidInput("unknown method");
}

EvalReport sweep(std::span<const SweepBuilding> buildings, const SweepConfig& cfg) {
  EvalReport report;
  report.master_seed = cfg.master_seed;
  report.horizon = cfg.horizon;
  report.seeds = cfg.estimator.seeds;
  struct Job {
    std::size_t building;
    Method method;
    Topology topo;
    std::size_t days;
  };
  std::vector<Job> jobs;
  for (std::size_t b = 0; b < buildings.size(); ++b) {
    for (const auto method : cfg.methods) {
      for (const auto topo : cfg.topologies) {
        for (const auto days : cfg.train_days) jobs.push_back({b, method, topo, days});
      }
    }
  }
  report.cells.resize(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    CellResult& cell = report.cells[j];
    cell.building = buildings[job.building].name;
    cell.method = job.method;
    cell.topology = job.topo;
    cell.train_days = job.days;
    try {
      const BuildingSeries* s = buildings[job.building].series;
      if (!s) throw InvalidInput("missing series");
      const auto parts = split(*s, {job.days, cfg.test_days, 0.25});
      const ThermalParams theta = estimate_cell(parts.train, job.method, job.topo, cfg, job.building);
      const auto fc = rolling_forecast(theta, parts.test, cfg.horizon, 1, cfg.estimator.substeps);
      cell.metrics = metrics(fc.predicted, fc.measured, value_range(parts.test.t_in));
      cell.theta = theta;
      cell.ok = std::isfinite(cell.metrics.rmse) && std::isfinite(cell.metrics.mae);
      if (!cell.ok) cell.error = "non-finite metrics";
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    log::info("cell " + cell.building + " " + std::string(to_string(cell.method)) + " " +
              std::string(to_string(cell.topology)) + " " + std::to_string(cell.train_days) +
              "d: " + (cell.ok ? "rmse " + std::to_string(cell.metrics.rmse) : "FAILED " + cell.error));
  });
  summarize(report);
  return report;
}

}  // namespace rcid
