#pragma once

// Experiment configuration shared by every CLI subcommand.
//
// JSON schema (every key optional; unknown keys are rejected):
// {
//   "master_seed": u64, "workers": n,
//   "topology": "1R1C" | "2R2C",          // estimate, evaluate, pretrain
//   "topologies": ["1R1C", "2R2C"],       // sweep
//   "method": "scratch" | "pretrained" | "ga",
//   "methods": [...],                     // sweep
//   "train_days": n, "train_lengths": [n, ...], "test_days": n,
//   "substeps": n,
//   "paths": {"data_dir", "target", "theta", "weights_in", "weights_1r1c",
//             "weights_2r2c", "out_dir"},
//   "generate": {"kind": "fleet" | "targets", "size": n, "days": n,
//                "noise_sigma": x, "gains": bool, "controller_gain": x},
//   "estimator": {"seeds", "epochs", "init_steps", "lr", "clip_norm",
//                 "window_stride", "pretrain_epochs", "pretrain_batch",
//                 "histogram_bins", "hidden_layers", "hidden_width"},
//   "ga": {"population", "generations", "tournament", "crossover_rate",
//          "mutation_rate", "mutation_scale", "elitism", "seeds"}
// }
// `workers` only affects scheduling and is excluded from the config hash.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rcid/datagen.hpp"
#include "rcid/evalkit.hpp"
#include "rcid/ga_baseline.hpp"
#include "rcid/parallel.hpp"
#include "rcid/training.hpp"

namespace rcid {

enum class GenerateKind { Fleet, Targets };

struct GenerateConfig {
  GenerateKind kind = GenerateKind::Fleet;
  std::size_t size = 20;
  std::size_t days = 60;
  DatasetOptions dataset{};
};

struct PathConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path target;      // CSV of the building to estimate / evaluate
  std::filesystem::path theta;       // θ* JSON for evaluate
  std::filesystem::path weights_in;  // pretrained weights for estimate
  std::filesystem::path weights_1r1c;
  std::filesystem::path weights_2r2c;
  std::filesystem::path out_dir = "out";
};

struct RunConfig {
  std::uint64_t master_seed = 0;
  std::size_t workers = default_workers();
  Topology topology = Topology::TwoRTwoC;
  std::vector<Topology> topologies{Topology::OneROneC, Topology::TwoRTwoC};
  Method method = Method::Scratch;
  std::vector<Method> methods{Method::Scratch, Method::Pretrained, Method::Ga};
  std::size_t train_days = 12;
  std::vector<std::size_t> train_lengths{12, 24, 48, 72};
  std::size_t test_days = 12;
  PathConfig paths{};
  GenerateConfig generate{};
  EstimatorConfig estimator{};
  GaConfig ga{};
  std::size_t ga_seeds = 8;

  // Throws InvalidInput on inconsistent values.
  void validate() const;
};

// Parses a config document; ParseError for malformed JSON (with the line),
// InvalidInput for unknown keys or bad values.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON with every field spelled out (defaults included).
std::string run_config_to_json(const RunConfig& cfg);

// FNV-1a 64 over the canonical JSON without `workers` and `paths`, as 16
// hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace rcid
