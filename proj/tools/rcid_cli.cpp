// rcid: RC thermal-model identification toolkit.
//
//   rcid generate --config cfg.json --out data/
//   rcid pretrain --config cfg.json --data data/ --out weights/
//   rcid estimate --config cfg.json --target T1.csv --method scratch --out est/
//   rcid evaluate --config cfg.json --target T1.csv --theta est/theta.json --out eval/
//   rcid sweep    --config cfg.json --data targets/ --out sweep/

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rcid/commands.hpp"
#include "rcid/log.hpp"
#include "rcid/parallel.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> data;
  std::optional<std::string> target;
  std::optional<std::string> theta;
  std::optional<std::string> weights;
  std::optional<std::string> topology;
  std::optional<std::string> method;
  std::optional<std::size_t> train_days;
  std::string log_level = "info";
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "master seed (overrides master_seed)");
  cmd->add_option("--out", f.out, "output directory (overrides paths.out_dir)");
  cmd->add_option("--workers", f.workers, "worker threads (default: available parallelism)");
  cmd->add_option("--log-level", f.log_level, "debug, info, warn, error or off");
}

rcid::RunConfig resolve(const Flags& f) {
  rcid::RunConfig cfg = f.config.empty() ? rcid::RunConfig{} : rcid::load_run_config(f.config);
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.out) cfg.paths.out_dir = *f.out;
  if (f.workers) cfg.workers = std::max<std::size_t>(1, *f.workers);
  if (f.data) cfg.paths.data_dir = *f.data;
  if (f.target) cfg.paths.target = *f.target;
  if (f.theta) cfg.paths.theta = *f.theta;
  if (f.weights) cfg.paths.weights_in = *f.weights;
  if (f.topology) cfg.topology = rcid::parse_topology(*f.topology);
  if (f.method) cfg.method = rcid::parse_method(*f.method);
  if (f.train_days) cfg.train_days = *f.train_days;
  cfg.validate();
  return cfg;
}

rcid::log::Level parse_level(const std::string& s) {
  using L = rcid::log::Level;
  if (s == "debug") return L::Debug;
  if (s == "info") return L::Info;
  if (s == "warn") return L::Warn;
  if (s == "error") return L::Error;
  if (s == "off") return L::Off;
  throw rcid::InvalidInput("unknown log level '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RC thermal-model parameter identification"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "write a synthetic fleet or the target suite");
  add_common(gen, f);

  auto* pre = app.add_subcommand("pretrain", "pretrain the estimator on a fleet directory");
  add_common(pre, f);
  pre->add_option("--data", f.data, "fleet directory (overrides paths.data_dir)");
  pre->add_option("--topology", f.topology, "1R1C or 2R2C");
  pre->add_option("--weights", f.weights, "weights output file");

  auto* est = app.add_subcommand("estimate", "estimate RC parameters of one building");
  add_common(est, f);
  est->add_option("--target", f.target, "building CSV");
  est->add_option("--method", f.method, "scratch, pretrained or ga");
  est->add_option("--topology", f.topology, "1R1C or 2R2C");
  est->add_option("--train-days", f.train_days, "days of training data");
  est->add_option("--weights", f.weights, "pretrained weights (method pretrained)");

  auto* ev = app.add_subcommand("evaluate", "24-hour rolling forecast of an estimate");
  add_common(ev, f);
  ev->add_option("--target", f.target, "building CSV");
  ev->add_option("--theta", f.theta, "theta JSON written by estimate");

  auto* sw = app.add_subcommand("sweep", "methods x topologies x training lengths");
  add_common(sw, f);
  sw->add_option("--data", f.data, "directory of target building CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    rcid::log::set_level(parse_level(f.log_level));
    const rcid::RunConfig cfg = resolve(f);
    if (gen->parsed()) return rcid::cmd_generate(cfg);
    if (pre->parsed()) return rcid::cmd_pretrain(cfg);
    if (est->parsed()) return rcid::cmd_estimate(cfg);
    if (ev->parsed()) return rcid::cmd_evaluate(cfg);
    if (sw->parsed()) return rcid::cmd_sweep(cfg);
  } catch (const std::exception& e) {
    std::cerr << "rcid: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
