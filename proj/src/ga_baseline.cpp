#include "rcid/ga_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rcid/parallel.hpp"
#include "rcid/rng.hpp"

namespace rcid {

void GaConfig::validate() const {
  if (population < 2) throw InvalidInput("GaConfig: population must be >= 2");
  if (tournament < 1) throw InvalidInput("GaConfig: tournament size must be >= 1");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw InvalidInput("GaConfig: crossover rate must lie in [0, 1]");
  }
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    throw InvalidInput("GaConfig: mutation rate must lie in [0, 1]");
  }
  if (!(mutation_scale >= 0.0) || !std::isfinite(mutation_scale)) {
    throw InvalidInput("GaConfig: mutation scale must be finite and >= 0");
  }
  if (elitism >= population) throw InvalidInput("GaConfig: elitism must be < population");
  if (bounds.empty()) throw InvalidInput("GaConfig: no bounds");
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      throw InvalidInput("GaConfig: every gene needs finite bounds with lo < hi");
    }
  }
}

namespace {

using Genome = std::vector<double>;

double safe_eval(const Objective& f, const Genome& g) {
  const double v = f(g);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

std::size_t tournament_pick(const std::vector<double>& fitness, std::size_t k, Rng& rng) {
  std::size_t best = uniform_index(rng, fitness.size());
  for (std::size_t i = 1; i < k; ++i) {
    const std::size_t c = uniform_index(rng, fitness.size());
    if (fitness[c] < fitness[best]) best = c;
  }
  return best;
}

}  // namespace

GaResult ga_minimize(const Objective& objective, const GaConfig& cfg, std::uint64_t seed,
                     const std::function<void(std::span<const double>)>& observer) {
  cfg.validate();
  const std::size_t dim = cfg.bounds.size();
  const std::size_t n = cfg.population;
  Rng rng(seed);
  GaResult result;

  const auto evaluate = [&](const Genome& g) {
    if (observer) observer(g);
    ++result.evaluations;
    return safe_eval(objective, g);
  };

  std::vector<Genome> pop(n, Genome(dim));
  std::vector<double> fit(n);
  for (auto& g : pop) {
    for (std::size_t d = 0; d < dim; ++d) g[d] = uniform(rng, cfg.bounds[d].lo, cfg.bounds[d].hi);
  }
  for (std::size_t i = 0; i < n; ++i) fit[i] = evaluate(pop[i]);

  const auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  };
  result.best_per_generation.push_back(fit[best_index()]);

  std::vector<std::size_t> order(n);
  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });
    std::vector<Genome> next;
    std::vector<double> next_fit;
    next.reserve(n);
    next_fit.reserve(n);
    for (std::size_t e = 0; e < cfg.elitism; ++e) {
      next.push_back(pop[order[e]]);
      next_fit.push_back(fit[order[e]]);
    }
    while (next.size() < n) {
      Genome a = pop[tournament_pick(fit, cfg.tournament, rng)];
      Genome b = pop[tournament_pick(fit, cfg.tournament, rng)];
      if (uniform01(rng) < cfg.crossover_rate) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double alpha = uniform01(rng);
          const double x = a[d];
          const double y = b[d];
          a[d] = alpha * x + (1.0 - alpha) * y;
          b[d] = (1.0 - alpha) * x + alpha * y;
        }
      }
      for (Genome* child : {&a, &b}) {
        for (std::size_t d = 0; d < dim; ++d) {
          const auto& bd = cfg.bounds[d];
          if (uniform01(rng) < cfg.mutation_rate) {
            (*child)[d] += cfg.mutation_scale * (bd.hi - bd.lo) * standard_normal(rng);
          }
          (*child)[d] = std::clamp((*child)[d], bd.lo, bd.hi);
        }
        if (next.size() < n) {
          next_fit.push_back(evaluate(*child));
          next.push_back(std::move(*child));
        }
      }
    }
    pop = std::move(next);
    fit = std::move(next_fit);
    result.best_per_generation.push_back(fit[best_index()]);
  }
  const std::size_t b = best_index();
  result.best = pop[b];
  result.best_loss = fit[b];
  return result;
}

double trajectory_mse(const BuildingSeries& series, Topology topo, std::span<const double> theta,
                      int substeps) {
  if (series.size() < 2) throw InvalidInput("trajectory_mse: series needs >= 2 samples");
  if (theta.size() != param_count(topo)) throw InvalidInput("trajectory_mse: arity mismatch");
  const std::size_t horizon = series.size() - 1;
  std::vector<double> traj;
  kernel::simulate_from_origin<double>(topo, theta, series.t_in[0],
                                       series.forcings(0, horizon), horizon, substeps, traj);
  double acc = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double e = traj[k] - series.t_in[k];
    acc += e * e;
  }
  return acc / static_cast<double>(horizon);
}

GaEstimate ga_estimate(const BuildingSeries& series, Topology topo, const GaConfig& config,
                       std::size_t seeds, std::uint64_t master_seed, std::uint64_t building_id,
                       int substeps, std::size_t workers) {
  series.validate();
  if (seeds == 0) throw InvalidInput("ga_estimate: seeds must be >= 1");
  if (series.size() < 2) throw InvalidInput("ga_estimate: series needs >= 2 samples");
  GaConfig cfg = config;
  if (cfg.bounds.empty()) cfg.bounds = default_init_ranges(topo);
  if (cfg.bounds.size() != param_count(topo)) {
    throw InvalidInput("ga_estimate: bounds arity does not match " + std::string(to_string(topo)));
  }
  for (const auto& b : cfg.bounds) {
    if (!(b.lo > 0.0)) throw InvalidInput("ga_estimate: parameter bounds must be positive");
  }
  cfg.validate();

  const Objective objective = [&](std::span<const double> theta) {
    return trajectory_mse(series, topo, theta, substeps);
  };
  GaEstimate out;
  out.seeds.resize(seeds);
  parallel_for(seeds, workers, [&](std::size_t s) {
    const auto r = ga_minimize(objective, cfg,
                               derive_seed(master_seed, StreamDomain::Genetic, building_id, s));
    out.seeds[s] = {static_cast<std::uint32_t>(s), r.best, r.best_loss};
  });
  std::size_t best = 0;
  for (std::size_t s = 1; s < seeds; ++s) {
    if (out.seeds[s].best_loss < out.seeds[best].best_loss) best = s;
  }
  if (!std::isfinite(out.seeds[best].best_loss)) {
    throw std::runtime_error("ga_estimate: every seed diverged");
  }
  out.theta_star = ThermalParams::from_values(topo, out.seeds[best].best);
  out.loss = out.seeds[best].best_loss;
  return out;
}

}  // namespace rcid
