#include "rcid/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "json_util.hpp"
#include "rcid/datagen.hpp"
#include "rcid/log.hpp"
#include "rcid/marginals.hpp"
#include "rcid/series_io.hpp"
#include "rcid/weights_io.hpp"

namespace rcid {

namespace fs = std::filesystem;
using detail::Json;

namespace {

Json stamp_json(const RunConfig& cfg) {
  return Json{{"config_hash", config_hash(cfg)}, {"master_seed", cfg.master_seed}};
}

ArtifactStamp stamp(const RunConfig& cfg) { return {config_hash(cfg), cfg.master_seed}; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

Json spec_json(const BuildingSpec& s) {
  return Json{{"U_wall", s.u_wall},
              {"c_wall", s.c_wall},
              {"f_win", s.f_win},
              {"A_ground", s.a_ground},
              {"T_sp_day", s.t_sp_day},
              {"dT_night", s.dt_night},
              {"weather", std::string(to_string(s.weather))},
              {"occupancy_gain", s.occupancy_gain}};
}

void write_building(const fs::path& dir, const std::string& name, const BuildingSpec& spec,
                    const BuildingSeries& series, std::uint64_t seed, const RunConfig& cfg,
                    Json& manifest) {
  const fs::path csv = dir / (name + ".csv");
  const fs::path side = dir / (name + ".json");
  write_series_csv(csv, series);
  Json j;
  j["name"] = name;
  j["spec"] = spec_json(spec);
  j["seed"] = seed;
  j["days"] = series.size() / kSamplesPerDay;
  j["noise_sigma"] = cfg.generate.dataset.noise_sigma;
  j["gains"] = cfg.generate.dataset.gains;
  j["truth"] = detail::params_to_json(*series.truth);
  j.update(stamp_json(cfg));
  detail::write_text(side, j.dump(2) + "\n");
  manifest["buildings"].push_back({{"name", name},
                                   {"csv", csv.filename().string()},
                                   {"sidecar", side.filename().string()},
                                   {"seed", seed},
                                   {"truth", detail::params_to_json(*series.truth)}});
}

std::string building_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

std::vector<const BuildingSeries*> series_ptrs(const std::vector<LoadedBuilding>& b) {
  std::vector<const BuildingSeries*> out;
  for (const auto& x : b) out.push_back(&x.series);
  return out;
}

std::string pretrain_curve_csv(const PretrainResult& r) {
  std::ostringstream out;
  out << "epoch,mean_loss,examples,skipped\n";
  for (const auto& row : r.curve) {
    out << row.epoch << ',' << format_double(row.mean_loss) << ',' << row.examples << ','
        << row.skipped << '\n';
  }
  return out.str();
}

PretrainResult run_pretrain(const std::vector<LoadedBuilding>& fleet, Topology topo,
                            const RunConfig& cfg) {
  const auto ptrs = series_ptrs(fleet);
  EstimatorNet net = make_pretrain_net(ptrs, topo, fleet_output_scale(ptrs, topo),
                                       cfg.estimator.shape, cfg.master_seed);
  return pretrain(std::move(net), ptrs, cfg.estimator, cfg.master_seed);
}

fs::path default_weights_path(const RunConfig& cfg, Topology topo) {
  return cfg.paths.out_dir / ("pretrained_" + std::string(to_string(topo)) + ".bin");
}

std::string trace_csv(const EstimationTrace& trace) {
  std::ostringstream out;
  out << "seed,epoch,loss";
  for (const auto& n : ThermalParams::names(trace.topology)) out << ',' << n;
  out << '\n';
  const std::size_t n = param_count(trace.topology);
  for (const auto& r : trace.records) {
    out << r.seed << ',' << r.epoch << ',' << format_double(r.loss);
    for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(r.theta[i]);
    out << '\n';
  }
  return out.str();
}

std::string histogram_csv(const EstimationTrace& trace, std::size_t bins) {
  std::ostringstream out;
  out << "param,bin,lo,hi,weight\n";
  const auto names = ThermalParams::names(trace.topology);
  for (std::size_t i = 0; i < param_count(trace.topology); ++i) {
    const auto h = marginal_histogram(trace, i, bins);
    for (std::size_t b = 0; b < h.bins(); ++b) {
      out << names[i] << ',' << b << ',' << format_double(h.edges[b]) << ','
          << format_double(h.edges[b + 1]) << ',' << format_double(h.weights[b]) << '\n';
    }
  }
  return out.str();
}

BuildingSeries training_block(const BuildingSeries& s, std::size_t train_days) {
  const std::size_t n = train_days * kSamplesPerDay;
  if (s.size() < n) {
    throw InvalidInput("target covers " + std::to_string(s.size()) + " samples; train_days = " +
                       std::to_string(train_days) + " needs " + std::to_string(n));
  }
  return s.slice(0, n);
}

void write_report(const EvalReport& report, const fs::path& dir, const std::string& stem) {
  detail::write_text(dir / (stem + ".json"), report_to_json(report));
  detail::write_text(dir / (stem + ".csv"), report_to_csv(report));
}

int report_exit_code(const EvalReport& report) {
  int failed = 0;
  for (const auto& c : report.cells) {
    if (c.ok) continue;
    ++failed;
    std::cerr << "failed cell: " << c.building << ' ' << to_string(c.method) << ' '
              << to_string(c.topology) << ' ' << c.train_days << "d: " << c.error << '\n';
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

LoadedBuilding load_building(const fs::path& csv) {
  LoadedBuilding b;
  b.name = csv.stem().string();
  b.series = read_series_csv(csv);
  fs::path side = csv;
  side.replace_extension(".json");
  if (fs::exists(side)) {
    const Json j = detail::parse_json_file(side);
    if (j.contains("truth")) b.series.truth = detail::params_from_json(j["truth"]);
  }
  return b;
}

std::vector<LoadedBuilding> load_building_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("data directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no building CSVs in '" + dir.string() + "'");
  std::vector<LoadedBuilding> out;
  for (const auto& f : files) out.push_back(load_building(f));
  return out;
}

int cmd_generate(const RunConfig& cfg) {
  const fs::path dir = cfg.paths.out_dir;
  ensure_dir(dir);
  Json manifest;
  manifest["kind"] = cfg.generate.kind == GenerateKind::Fleet ? "fleet" : "targets";
  manifest["days"] = cfg.generate.days;
  manifest.update(stamp_json(cfg));
  manifest["buildings"] = Json::array();
  if (cfg.generate.kind == GenerateKind::Fleet) {
    const auto fleet = generate_fleet(cfg.generate.size, cfg.generate.days, cfg.master_seed, {},
                                      cfg.generate.dataset, cfg.workers);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      write_building(dir, building_name("building_", i), fleet[i].spec, fleet[i].series,
                     fleet[i].weather_seed, cfg, manifest);
    }
  } else {
    const auto specs = target_suite();
    const std::size_t n = std::min(cfg.generate.size, specs.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, StreamDomain::Targets, i);
      const auto series = generate_dataset(specs[i], cfg.generate.days, seed, cfg.generate.dataset);
      write_building(dir, "T" + std::to_string(i + 1), specs[i], series, seed, cfg, manifest);
    }
  }
  manifest["count"] = manifest["buildings"].size();
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  log::info("wrote " + std::to_string(manifest["count"].get<std::size_t>()) + " buildings to " +
            dir.string());
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  const auto fleet = load_building_dir(cfg.paths.data_dir);
  ensure_dir(cfg.paths.out_dir);
  const auto result = run_pretrain(fleet, cfg.topology, cfg);
  for (const auto& row : result.curve) {
    if (!std::isfinite(row.mean_loss)) {
      throw std::runtime_error("pretraining produced a non-finite loss in epoch " +
                               std::to_string(row.epoch));
    }
  }
  const fs::path weights =
      cfg.paths.weights_in.empty() ? default_weights_path(cfg, cfg.topology) : cfg.paths.weights_in;
  save_weights(weights, result.net, stamp(cfg));
  detail::write_text(cfg.paths.out_dir / ("loss_curve_" + std::string(to_string(cfg.topology)) + ".csv"),
                     pretrain_curve_csv(result));
  log::info("wrote " + weights.string());
  return 0;
}

int cmd_estimate(const RunConfig& cfg) {
  if (cfg.paths.target.empty()) throw InvalidInput("estimate: paths.target is required");
  const auto target = load_building(cfg.paths.target);
  const auto train = training_block(target.series, cfg.train_days);
  ensure_dir(cfg.paths.out_dir);

  Json out;
  out["target"] = target.name;
  out["method"] = std::string(to_string(cfg.method));
  out["topology"] = std::string(to_string(cfg.topology));
  out["train_days"] = cfg.train_days;
  out.update(stamp_json(cfg));

  std::optional<EstimationResult> neural;
  if (cfg.method == Method::Ga) {
    const auto r = ga_estimate(train, cfg.topology, cfg.ga, cfg.ga_seeds, cfg.master_seed, 0,
                               cfg.estimator.substeps, cfg.workers);
    out["seeds"] = cfg.ga_seeds;
    out["theta"] = detail::params_to_json(r.theta_star);
    out["loss"] = r.loss;
  } else {
    EstimatorConfig est = cfg.estimator;
    est.workers = cfg.workers;
    if (cfg.method == Method::Scratch) {
      neural = train_from_scratch(train, cfg.topology, est, cfg.master_seed);
      out["seeds"] = est.seeds;
    } else {
      if (cfg.paths.weights_in.empty()) {
        throw InvalidInput("estimate: method 'pretrained' needs paths.weights_in");
      }
      const EstimatorNet net = load_weights(cfg.paths.weights_in);
      if (net.topology() != cfg.topology) {
        throw InvalidInput("estimate: weights are " + std::string(to_string(net.topology())) +
                           " but the configured topology is " +
                           std::string(to_string(cfg.topology)));
      }
      neural = finetune(net, train, est, cfg.master_seed);
      out["seeds"] = 1;
    }
    out["theta"] = detail::params_to_json(neural->theta_star);
    out["records"] = neural->trace.size();
    detail::write_text(cfg.paths.out_dir / "trace.csv", trace_csv(neural->trace));
    detail::write_text(cfg.paths.out_dir / "histogram.csv",
                       histogram_csv(neural->trace, cfg.estimator.histogram_bins));
  }
  detail::write_text(cfg.paths.out_dir / "theta.json", out.dump(2) + "\n");
  log::info("theta* = " + out["theta"]["values"].dump());
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  if (cfg.paths.target.empty()) throw InvalidInput("evaluate: paths.target is required");
  if (cfg.paths.theta.empty()) throw InvalidInput("evaluate: paths.theta is required");
  const auto target = load_building(cfg.paths.target);
  const Json tj = detail::parse_json_file(cfg.paths.theta);
  ensure_dir(cfg.paths.out_dir);

  EvalReport report;
  report.master_seed = cfg.master_seed;
  report.config_hash = config_hash(cfg);
  CellResult cell;
  cell.building = target.name;
  cell.method = parse_method(tj.at("method").get<std::string>());
  cell.train_days = tj.contains("train_days") ? tj["train_days"].get<std::size_t>() : cfg.train_days;
  report.seeds = tj.contains("seeds") ? tj["seeds"].get<std::size_t>() : 0;
  try {
    const ThermalParams theta = detail::params_from_json(tj.at("theta"));
    cell.topology = theta.topology();
    cell.theta = theta;
    const auto parts = split(target.series, {cell.train_days, cfg.test_days, 0.25});
    const auto fc = rolling_forecast(theta, parts.test, kForecastHorizon, 1, cfg.estimator.substeps);
    cell.metrics = metrics(fc.predicted, fc.measured, value_range(parts.test.t_in));
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  report.cells.push_back(cell);
  summarize(report);
  write_report(report, cfg.paths.out_dir, "report");
  return report_exit_code(report);
}

int cmd_sweep(const RunConfig& cfg) {
  const auto buildings = load_building_dir(cfg.paths.data_dir);
  ensure_dir(cfg.paths.out_dir);
  SweepConfig sc;
  sc.methods = cfg.methods;
  sc.topologies = cfg.topologies;
  sc.train_days = cfg.train_lengths;
  sc.test_days = cfg.test_days;
  sc.estimator = cfg.estimator;
  sc.estimator.workers = 1;
  sc.ga = cfg.ga;
  sc.ga_seeds = cfg.ga_seeds;
  sc.master_seed = cfg.master_seed;
  sc.workers = cfg.workers;

  std::map<Topology, EstimatorNet> nets;
  if (std::find(sc.methods.begin(), sc.methods.end(), Method::Pretrained) != sc.methods.end()) {
    std::optional<std::vector<LoadedBuilding>> fleet;
    for (const auto topo : sc.topologies) {
      const fs::path given =
          topo == Topology::OneROneC ? cfg.paths.weights_1r1c : cfg.paths.weights_2r2c;
      if (!given.empty()) {
        nets.emplace(topo, load_weights(given));
        continue;
      }
      // No weights supplied: pretrain on a freshly generated source fleet.
      if (!fleet) {
        log::info("sweep: generating a " + std::to_string(cfg.generate.size) +
                  "-building source fleet for pretraining");
        const auto members =
            generate_fleet(cfg.generate.size, cfg.generate.days,
                           derive_seed(cfg.master_seed, StreamDomain::FleetSpecs, 1), {},
                           cfg.generate.dataset, cfg.workers);
        fleet.emplace();
        for (std::size_t i = 0; i < members.size(); ++i) {
          fleet->push_back({building_name("source_", i), members[i].series});
        }
      }
      auto r = run_pretrain(*fleet, topo, cfg);
      save_weights(default_weights_path(cfg, topo), r.net, stamp(cfg));
      nets.emplace(topo, std::move(r.net));
    }
  }
  for (const auto& [topo, net] : nets) sc.pretrained[topo] = &net;

  std::vector<SweepBuilding> sb;
  for (const auto& b : buildings) sb.push_back({b.name, &b.series});
  EvalReport report = sweep(sb, sc);
  report.config_hash = config_hash(cfg);
  write_report(report, cfg.paths.out_dir, "report");
  return report_exit_code(report);
}

}  // namespace rcid
