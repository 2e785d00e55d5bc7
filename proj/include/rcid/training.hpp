#pragma once

// Neural parameter estimation: the per-window estimate -> simulate -> loss
// -> backprop -> Adam loop, the from-scratch regime (constant-guess
// initialization, several seeds) and the pretrain / fine-tune regime.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rcid/diffkit.hpp"
#include "rcid/estimator_net.hpp"
#include "rcid/rc_models.hpp"
#include "rcid/rng.hpp"
#include "rcid/series.hpp"

namespace rcid {

struct TraceRecord {
  std::array<double, 5> theta{};
  double loss = 0.0;
  std::uint32_t epoch = 0;
  std::uint32_t seed = 0;
};

// Loss/parameter pairs explored during training. Only finite records are
// stored; every theta is strictly positive.
struct EstimationTrace {
  Topology topology = Topology::OneROneC;
  std::vector<TraceRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
};

struct EstimatorConfig {
  NetShape shape{};
  std::size_t window_stride = 1;
  int substeps = kDefaultSubsteps;
  diffkit::AdamConfig adam{};

  // From scratch.
  std::size_t seeds = 8;
  std::size_t epochs = 50;
  std::size_t init_steps = 2000;
  std::vector<ParamRange> init_ranges;  // empty: default_init_ranges(topology)

  // Pretraining.
  std::size_t pretrain_epochs = 30;
  std::size_t pretrain_batch = 32;

  // Marginalization.
  std::size_t histogram_bins = 100;

  // Concurrent seed runs.
  std::size_t workers = 1;
};

// Reusable buffers for train_step (tape and gradient tensors).
class StepWorkspace {
 public:
  diffkit::Tape tape;
  std::vector<diffkit::Matrix> grads;
  std::vector<double> traj_scratch;
};

struct StepResult {
  std::array<double, 5> theta{};
  double loss = 0.0;
  bool finite = false;
};

// Differentiable loss of one window: ||simulate(theta) - label||_2 over the
// lookback + 1 label samples, with the simulation started from label[0]
// (and the voltage-divider envelope temperature for 2R2C).
double window_loss(Topology topo, std::span<const double> theta, const TrainingWindow& window,
                   int substeps = kDefaultSubsteps);

// Records estimate -> simulate -> loss for one window on `tape` and returns
// the loss node; theta_out receives the estimated parameters.
diffkit::Var record_window_loss(const EstimatorNet& net, diffkit::Tape& tape,
                                std::span<const diffkit::DenseVar> leaves,
                                const TrainingWindow& window, int substeps,
                                std::array<double, 5>* theta_out = nullptr);

// One estimate -> simulate -> loss -> update iteration with batch size 1. Returns the pre-update (theta,
// loss). Non-finite losses or gradients leave the weights untouched and
// produce finite == false. When `trace` is given, finite results are
// appended with the given epoch/seed tags.
StepResult train_step(EstimatorNet& net, const TrainingWindow& window, diffkit::AdamState& adam,
                      StepWorkspace& ws, int substeps = kDefaultSubsteps,
                      EstimationTrace* trace = nullptr, std::uint32_t epoch = 0,
                      std::uint32_t seed = 0);

// Trains the net to emit `guess` for inputs drawn uniformly from [0,1].
// The output bias is first set to the guess' pre-activation, then `steps`
// Adam iterations on ||z - z_guess||² flatten the response.
void init_to_constant_guess(EstimatorNet& net, const ThermalParams& guess, std::size_t steps,
                            Rng& rng, diffkit::AdamConfig adam = {});

// Mean absolute relative deviation of the net's outputs from `guess` over
// `samples` fresh uniform [0,1] inputs.
double constant_guess_deviation(const EstimatorNet& net, const ThermalParams& guess, Rng& rng,
                                std::size_t samples = 100);

struct SeedSummary {
  std::uint32_t seed = 0;
  std::vector<double> initial_guess;
  std::size_t records = 0;
  std::size_t skipped = 0;
  bool excluded = false;
};

struct EstimationResult {
  EstimationTrace trace;
  ThermalParams theta_star = ThermalParams::one_r_one_c(1, 1, 1);
  std::vector<SeedSummary> seeds;
};

// Output scale for a from-scratch net: the midpoints of the init ranges.
diffkit::Vector range_midpoints(std::span<const ParamRange> ranges);

EstimationResult train_from_scratch(const BuildingSeries& series, Topology topo,
                                    const EstimatorConfig& config, std::uint64_t master_seed,
                                    std::uint64_t building_id = 0);

struct PretrainEpoch {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t examples = 0;
  std::size_t skipped = 0;
};

struct PretrainResult {
  EstimatorNet net;
  std::vector<PretrainEpoch> curve;
};

// Fresh net for pretraining: Glorot init from the NetInit stream,
// standardization fitted on the pooled fleet, and output scales from
// `output_scale` (see fleet_output_scale).
EstimatorNet make_pretrain_net(std::span<const BuildingSeries* const> fleet, Topology topo,
                               const diffkit::Vector& output_scale, const NetShape& shape,
                               std::uint64_t master_seed);

// Fleet-calibrated output scale: median ground-truth value / ln 2 per
// parameter when every fleet member carries ground truth (2R2C truth is
// collapsed for 1R1C as R_ia = R_ie + R_ea, C_i = C_i + C_e), otherwise the
// midpoints of the default init ranges.
diffkit::Vector fleet_output_scale(std::span<const BuildingSeries* const> fleet, Topology topo);

// Pools windows across the fleet, reshuffles every epoch, averages the
// finite per-example losses of each batch and takes one Adam step per batch.
PretrainResult pretrain(EstimatorNet net, std::span<const BuildingSeries* const> fleet,
                        const EstimatorConfig& config, std::uint64_t master_seed);

// Weight-initialization transfer: fresh Adam state, single seed, batch size
// one, no constant-guess init. With zero epochs the trace holds one
// evaluation pass of the pretrained net over all windows.
EstimationResult finetune(const EstimatorNet& pretrained, const BuildingSeries& series,
                          const EstimatorConfig& config, std::uint64_t master_seed,
                          std::uint64_t building_id = 0);

// Mean window loss of the net over the given windows (non-finite skipped).
double mean_window_loss(const EstimatorNet& net, std::span<const TrainingWindow> windows,
                        int substeps = kDefaultSubsteps);

}  // namespace rcid
