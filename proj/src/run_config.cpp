#include "rcid/run_config.hpp"

#include <cstdio>
#include <set>

#include "json_util.hpp"

namespace rcid {

using detail::Json;

void RunConfig::validate() const {
  if (train_days == 0) throw InvalidInput("config: train_days must be >= 1");
  if (test_days == 0) throw InvalidInput("config: test_days must be >= 1");
  if (estimator.substeps < 1) throw InvalidInput("config: substeps must be >= 1");
  if (estimator.seeds == 0) throw InvalidInput("config: estimator.seeds must be >= 1");
  if (estimator.window_stride == 0) throw InvalidInput("config: window_stride must be >= 1");
  if (estimator.histogram_bins == 0) throw InvalidInput("config: histogram_bins must be >= 1");
  if (estimator.pretrain_batch == 0) throw InvalidInput("config: pretrain_batch must be >= 1");
  if (!(estimator.adam.lr > 0.0)) throw InvalidInput("config: lr must be > 0");
  if (ga_seeds == 0) throw InvalidInput("config: ga.seeds must be >= 1");
  if (generate.size == 0) throw InvalidInput("config: generate.size must be >= 1");
  if (generate.days == 0) throw InvalidInput("config: generate.days must be >= 1");
  for (auto d : train_lengths) {
    if (d == 0) throw InvalidInput("config: train_lengths entries must be >= 1");
  }
  GaConfig g = ga;
  if (g.bounds.empty()) g.bounds = default_init_ranges(Topology::TwoRTwoC);
  g.validate();
}

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput("config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw InvalidInput("config: unknown key '" + where + k + "'");
  }
}

template <typename T>
void take(const Json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void take_path(const Json& j, const char* key, std::filesystem::path& dst) {
  if (j.contains(key)) dst = j.at(key).get<std::string>();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    throw ParseError(source, 1 + static_cast<std::size_t>(
                                     std::count(text.begin(), text.begin() + upto, '\n')),
                     e.what());
  }
  RunConfig c;
  try {
    check_keys(j,
               {"master_seed", "workers", "topology", "topologies", "method", "methods",
                "train_days", "train_lengths", "test_days", "substeps", "paths", "generate",
                "estimator", "ga"},
               "");
    take(j, "master_seed", c.master_seed);
    take(j, "workers", c.workers);
    if (j.contains("topology")) c.topology = parse_topology(j["topology"].get<std::string>());
    if (j.contains("topologies")) {
      c.topologies.clear();
      for (const auto& t : j["topologies"]) c.topologies.push_back(parse_topology(t.get<std::string>()));
    }
    if (j.contains("method")) c.method = parse_method(j["method"].get<std::string>());
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    take(j, "train_days", c.train_days);
    take(j, "train_lengths", c.train_lengths);
    take(j, "test_days", c.test_days);
    take(j, "substeps", c.estimator.substeps);
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      check_keys(p,
                 {"data_dir", "target", "theta", "weights_in", "weights_1r1c", "weights_2r2c",
                  "out_dir"},
                 "paths.");
      take_path(p, "data_dir", c.paths.data_dir);
      take_path(p, "target", c.paths.target);
      take_path(p, "theta", c.paths.theta);
      take_path(p, "weights_in", c.paths.weights_in);
      take_path(p, "weights_1r1c", c.paths.weights_1r1c);
      take_path(p, "weights_2r2c", c.paths.weights_2r2c);
      take_path(p, "out_dir", c.paths.out_dir);
    }
    if (j.contains("generate")) {
      const auto& g = j["generate"];
      check_keys(g, {"kind", "size", "days", "noise_sigma", "gains", "controller_gain"},
                 "generate.");
      if (g.contains("kind")) {
        const auto k = g["kind"].get<std::string>();
        if (k == "fleet") {
          c.generate.kind = GenerateKind::Fleet;
        } else if (k == "targets") {
          c.generate.kind = GenerateKind::Targets;
        } else {
          throw InvalidInput("config: generate.kind must be 'fleet' or 'targets'");
        }
      }
      take(g, "size", c.generate.size);
      take(g, "days", c.generate.days);
      take(g, "noise_sigma", c.generate.dataset.noise_sigma);
      take(g, "gains", c.generate.dataset.gains);
      take(g, "controller_gain", c.generate.dataset.controller_gain);
    }
    if (j.contains("estimator")) {
      const auto& e = j["estimator"];
      check_keys(e,
                 {"seeds", "epochs", "init_steps", "lr", "clip_norm", "window_stride",
                  "pretrain_epochs", "pretrain_batch", "histogram_bins", "hidden_layers",
                  "hidden_width"},
                 "estimator.");
      auto& est = c.estimator;
      take(e, "seeds", est.seeds);
      take(e, "epochs", est.epochs);
      take(e, "init_steps", est.init_steps);
      take(e, "lr", est.adam.lr);
      take(e, "clip_norm", est.adam.clip_norm);
      take(e, "window_stride", est.window_stride);
      take(e, "pretrain_epochs", est.pretrain_epochs);
      take(e, "pretrain_batch", est.pretrain_batch);
      take(e, "histogram_bins", est.histogram_bins);
      take(e, "hidden_layers", est.shape.hidden_layers);
      take(e, "hidden_width", est.shape.hidden_width);
    }
    if (j.contains("ga")) {
      const auto& g = j["ga"];
      check_keys(g,
                 {"population", "generations", "tournament", "crossover_rate", "mutation_rate",
                  "mutation_scale", "elitism", "seeds"},
                 "ga.");
      take(g, "population", c.ga.population);
      take(g, "generations", c.ga.generations);
      take(g, "tournament", c.ga.tournament);
      take(g, "crossover_rate", c.ga.crossover_rate);
      take(g, "mutation_rate", c.ga.mutation_rate);
      take(g, "mutation_scale", c.ga.mutation_scale);
      take(g, "elitism", c.ga.elitism);
      take(g, "seeds", c.ga_seeds);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(source + ": " + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(detail::read_text(path), path.string());
}

namespace {

Json to_json(const RunConfig& c, bool with_workers) {
  Json j;
  j["master_seed"] = c.master_seed;
  if (with_workers) j["workers"] = c.workers;
  j["topology"] = std::string(to_string(c.topology));
  Json topos = Json::array();
  for (auto t : c.topologies) topos.push_back(std::string(to_string(t)));
  j["topologies"] = topos;
  j["method"] = std::string(to_string(c.method));
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  j["train_days"] = c.train_days;
  j["train_lengths"] = c.train_lengths;
  j["test_days"] = c.test_days;
  j["substeps"] = c.estimator.substeps;
  j["paths"] = {{"data_dir", c.paths.data_dir.string()},
                {"target", c.paths.target.string()},
                {"theta", c.paths.theta.string()},
                {"weights_in", c.paths.weights_in.string()},
                {"weights_1r1c", c.paths.weights_1r1c.string()},
                {"weights_2r2c", c.paths.weights_2r2c.string()},
                {"out_dir", c.paths.out_dir.string()}};
  j["generate"] = {{"kind", c.generate.kind == GenerateKind::Fleet ? "fleet" : "targets"},
                   {"size", c.generate.size},
                   {"days", c.generate.days},
                   {"noise_sigma", c.generate.dataset.noise_sigma},
                   {"gains", c.generate.dataset.gains},
                   {"controller_gain", c.generate.dataset.controller_gain}};
  const auto& e = c.estimator;
  j["estimator"] = {{"seeds", e.seeds},
                    {"epochs", e.epochs},
                    {"init_steps", e.init_steps},
                    {"lr", e.adam.lr},
                    {"clip_norm", e.adam.clip_norm},
                    {"window_stride", e.window_stride},
                    {"pretrain_epochs", e.pretrain_epochs},
                    {"pretrain_batch", e.pretrain_batch},
                    {"histogram_bins", e.histogram_bins},
                    {"hidden_layers", e.shape.hidden_layers},
                    {"hidden_width", e.shape.hidden_width}};
  j["ga"] = {{"population", c.ga.population},
             {"generations", c.ga.generations},
             {"tournament", c.ga.tournament},
             {"crossover_rate", c.ga.crossover_rate},
             {"mutation_rate", c.ga.mutation_rate},
             {"mutation_scale", c.ga.mutation_scale},
             {"elitism", c.ga.elitism},
             {"seeds", c.ga_seeds}};
  return j;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) { return to_json(cfg, true).dump(2) + "\n"; }

std::string config_hash(const RunConfig& cfg) {
  Json j = to_json(cfg, false);
  j.erase("paths");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rcid
