#pragma once

// CLI subcommands. Each returns the process exit code; exceptions carry
// user-facing messages and are reported by the caller.

#include <filesystem>
#include <string>
#include <vector>

#include "rcid/run_config.hpp"
#include "rcid/series.hpp"

namespace rcid {

struct LoadedBuilding {
  std::string name;
  BuildingSeries series;  // truth filled from the JSON sidecar when present
};

// Every *.csv in `dir`, sorted by file name.
std::vector<LoadedBuilding> load_building_dir(const std::filesystem::path& dir);
// One CSV plus its optional <stem>.json sidecar.
LoadedBuilding load_building(const std::filesystem::path& csv);

int cmd_generate(const RunConfig& cfg);
int cmd_pretrain(const RunConfig& cfg);
int cmd_estimate(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

}  // namespace rcid
