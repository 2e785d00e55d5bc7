#pragma once

// Real-coded genetic algorithm over a bounded box, and the trajectory-MSE
// parameter estimator built on it.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rcid/estimator_net.hpp"
#include "rcid/rc_models.hpp"
#include "rcid/series.hpp"

namespace rcid {

struct GaConfig {
  std::size_t population = 50;
  std::size_t generations = 100;
  std::size_t tournament = 3;
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;   // per gene
  double mutation_scale = 0.1;  // sigma as a fraction of the gene range
  std::size_t elitism = 1;
  std::vector<ParamRange> bounds;  // empty: default_init_ranges(topology) for ga_estimate

  // population >= 2, rates in [0, 1], tournament >= 1, elitism < population,
  // lo < hi for every gene.
  void validate() const;
};

using Objective = std::function<double(std::span<const double>)>;

struct GaResult {
  std::vector<double> best;
  double best_loss = 0.0;
  // Best fitness after each generation (index 0 is the initial population).
  std::vector<double> best_per_generation;
  std::size_t evaluations = 0;
};

// Non-finite objective values rank as +inf. When `observer` is set it sees
// every evaluated individual.
GaResult ga_minimize(const Objective& objective, const GaConfig& config, std::uint64_t seed,
                     const std::function<void(std::span<const double>)>& observer = {});

// MSE between measured T_in and a single simulation of the whole series from
// its first sample (divider envelope temperature for 2R2C).
double trajectory_mse(const BuildingSeries& series, Topology topo, std::span<const double> theta,
                      int substeps = kDefaultSubsteps);

struct GaSeedRun {
  std::uint32_t seed = 0;
  std::vector<double> best;
  double best_loss = 0.0;
};

struct GaEstimate {
  ThermalParams theta_star = ThermalParams::one_r_one_c(1, 1, 1);
  double loss = 0.0;
  std::vector<GaSeedRun> seeds;
};

// Best of `seeds` independent runs; ties go to the lower seed index.
GaEstimate ga_estimate(const BuildingSeries& series, Topology topo, const GaConfig& config,
                       std::size_t seeds, std::uint64_t master_seed, std::uint64_t building_id = 0,
                       int substeps = kDefaultSubsteps, std::size_t workers = 1);

}  // namespace rcid
