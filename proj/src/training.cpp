#include "rcid/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rcid/log.hpp"
#include "rcid/marginals.hpp"
#include "rcid/parallel.hpp"

namespace rcid {

using diffkit::AdamState;
using diffkit::DenseVar;
using diffkit::Matrix;
using diffkit::Tape;
using diffkit::Var;
using diffkit::Vector;

namespace {

bool all_positive_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x > 0.0; });
}

bool apply_gradients(EstimatorNet& net, const diffkit::GradientTable& table,
                     std::span<const DenseVar> leaves, StepWorkspace& ws, AdamState& adam) {
  // Adjoints are read in place; only leaves without one get a zero buffer.
  ws.grads.resize(leaves.size());
  std::vector<const Matrix*> gptrs(leaves.size());
  for (std::size_t j = 0; j < leaves.size(); ++j) {
    gptrs[j] = table.find(leaves[j]);
    if (!gptrs[j]) {
      table.assign_to(leaves[j], ws.grads[j]);
      gptrs[j] = &ws.grads[j];
    }
  }
  if (!std::isfinite(diffkit::global_norm(gptrs))) return false;
  const auto pptrs = net.tensor_ptrs();
  diffkit::adam_step(pptrs, gptrs, adam);
  return true;
}

AdamState fresh_adam(const EstimatorNet& net, const diffkit::AdamConfig& cfg) {
  const auto ptrs = net.tensor_ptrs();
  return AdamState(ptrs, cfg);
}

void check_window_fits(const EstimatorNet& net, std::size_t series_len) {
  if (series_len < net.shape().lookback + 1) {
    throw InvalidInput("series has " + std::to_string(series_len) +
                       " samples; at least lookback + 1 = " +
                       std::to_string(net.shape().lookback + 1) + " are required");
  }
}

}  // namespace

double window_loss(Topology topo, std::span<const double> theta, const TrainingWindow& window,
                   int substeps) {
  const auto label = window.label();
  std::vector<double> traj;
  kernel::simulate_from_origin<double>(topo, theta.first(param_count(topo)), label[0],
                                       window.forcings(), window.lookback(), substeps, traj);
  double acc = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double e = traj[k] - label[k];
    acc = acc + e * e;
  }
  return std::sqrt(acc);
}

Var record_window_loss(const EstimatorNet& net, Tape& tape, std::span<const DenseVar> leaves,
                       const TrainingWindow& window, int substeps,
                       std::array<double, 5>* theta_out) {
  const auto x = tape.dense_constant(net.input_features(window));
  const auto theta = net.record_forward(tape, leaves, x);
  const std::size_t n = net.output_size();
  std::array<Var, 5> p;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = tape.component(theta, static_cast<Eigen::Index>(i));
    if (theta_out) (*theta_out)[i] = p[i].value();
  }
  const auto label = window.label();
  std::vector<Var> traj;
  kernel::simulate_from_origin<Var>(net.topology(), std::span<const Var>(p.data(), n), label[0],
                                    window.forcings(), window.lookback(), substeps, traj);
  Var acc = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const Var e = traj[k] - label[k];
    acc = acc + e * e;
  }
  return diffkit::sqrt(acc);
}

StepResult train_step(EstimatorNet& net, const TrainingWindow& window, AdamState& adam,
                      StepWorkspace& ws, int substeps, EstimationTrace* trace,
                      std::uint32_t epoch, std::uint32_t seed) {
  StepResult out;
  ws.tape.clear();
  const auto leaves = net.bind(ws.tape);
  const Var loss = record_window_loss(net, ws.tape, leaves, window, substeps, &out.theta);
  out.loss = loss.value();
  const std::span<const double> theta(out.theta.data(), net.output_size());
  if (!std::isfinite(out.loss) || !all_positive_finite(theta)) {
    log::debug("train_step: non-finite loss at window " + std::to_string(window.start()) +
               "; update skipped");
    return out;
  }
  const auto table = ws.tape.backward(loss);
  if (!apply_gradients(net, table, leaves, ws, adam)) {
    log::debug("train_step: non-finite gradient at window " + std::to_string(window.start()) +
               "; update skipped");
    return out;
  }
  out.finite = true;
  if (trace) trace->records.push_back({out.theta, out.loss, epoch, seed});
  return out;
}

void init_to_constant_guess(EstimatorNet& net, const ThermalParams& guess, std::size_t steps,
                            Rng& rng, diffkit::AdamConfig adam_cfg) {
  if (guess.topology() != net.topology()) {
    throw InvalidInput("init_to_constant_guess: guess topology does not match the net");
  }
  const std::size_t n = net.output_size();
  Vector target(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    target(static_cast<Eigen::Index>(i)) = softplus_inverse(guess[i] / net.output_scale()(i));
  }
  net.tensors().back().col(0) = target;

  AdamState adam = fresh_adam(net, adam_cfg);
  StepWorkspace ws;
  const auto in = static_cast<Eigen::Index>(net.shape().input_size());
  Vector x(in);
  const Matrix neg_target = -target;
  for (std::size_t s = 0; s < steps; ++s) {
    for (Eigen::Index k = 0; k < in; ++k) x(k) = uniform01(rng);
    ws.tape.clear();
    const auto leaves = net.bind(ws.tape);
    const auto z = net.record_preactivation(ws.tape, leaves, ws.tape.dense_constant(x));
    const auto diff = ws.tape.add(z, ws.tape.dense_constant(neg_target));
    const Var loss = ws.tape.squared_norm(diff);
    const auto table = ws.tape.backward(loss);
    apply_gradients(net, table, leaves, ws, adam);
  }
}

double constant_guess_deviation(const EstimatorNet& net, const ThermalParams& guess, Rng& rng,
                                std::size_t samples) {
  const std::size_t n = net.output_size();
  const auto in = static_cast<Eigen::Index>(net.shape().input_size());
  Vector x(in);
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index k = 0; k < in; ++k) x(k) = uniform01(rng);
    const Vector theta = net.forward(x);
    for (std::size_t i = 0; i < n; ++i) {
      acc += std::abs(theta(static_cast<Eigen::Index>(i)) - guess[i]) / guess[i];
    }
  }
  return acc / static_cast<double>(samples * n);
}

Vector range_midpoints(std::span<const ParamRange> ranges) {
  Vector v(static_cast<Eigen::Index>(ranges.size()));
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = 0.5 * (ranges[i].lo + ranges[i].hi);
  }
  return v;
}

namespace {

struct SeedRun {
  EstimationTrace trace;
  SeedSummary summary;
};

void run_epochs(EstimatorNet& net, std::span<const TrainingWindow> windows, std::size_t epochs,
                AdamState& adam, Rng& rng, int substeps, std::uint32_t seed,
                EstimationTrace& trace, std::size_t& skipped) {
  StepWorkspace ws;
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  trace.records.reserve(trace.records.size() + epochs * windows.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    shuffle(order.begin(), order.end(), rng);
    for (const std::size_t idx : order) {
      const auto r = train_step(net, windows[idx], adam, ws, substeps, &trace,
                                static_cast<std::uint32_t>(e), seed);
      if (!r.finite) ++skipped;
    }
  }
}

std::vector<ParamRange> resolve_ranges(const EstimatorConfig& cfg, Topology topo) {
  auto ranges = cfg.init_ranges.empty() ? default_init_ranges(topo) : cfg.init_ranges;
  if (ranges.size() != param_count(topo)) {
    throw InvalidInput("init_ranges: expected " + std::to_string(param_count(topo)) +
                       " ranges for " + std::string(to_string(topo)));
  }
  for (const auto& r : ranges) {
    if (!(r.lo > 0.0) || !(r.hi > r.lo)) {
      throw InvalidInput("init_ranges: each range needs 0 < lo < hi");
    }
  }
  return ranges;
}

EstimationResult finish(std::vector<SeedRun>& runs, Topology topo, std::size_t bins) {
  EstimationResult result;
  result.trace.topology = topo;
  std::size_t total = 0;
  for (const auto& r : runs) total += r.trace.size();
  result.trace.records.reserve(total);
  for (auto& r : runs) {
    if (r.trace.empty()) {
      r.summary.excluded = true;
      log::warn("seed " + std::to_string(r.summary.seed) +
                " produced no finite records and is excluded");
    }
    result.trace.records.insert(result.trace.records.end(), r.trace.records.begin(),
                                r.trace.records.end());
    result.seeds.push_back(r.summary);
  }
  if (result.trace.empty()) {
    throw std::runtime_error("estimation diverged: no finite loss records in any seed");
  }
  result.theta_star = select_params(result.trace, bins);
  return result;
}

}  // namespace

EstimationResult train_from_scratch(const BuildingSeries& series, Topology topo,
                                    const EstimatorConfig& cfg, std::uint64_t master_seed,
                                    std::uint64_t building_id) {
  series.validate();
  const auto ranges = resolve_ranges(cfg, topo);
  if (cfg.seeds == 0) throw InvalidInput("train_from_scratch: seeds must be >= 1");
  const auto windows = slice_windows(series, cfg.shape.lookback, cfg.window_stride);
  const BuildingSeries* only[] = {&series};
  const auto standardization = Standardization::fit(only);
  const Vector scale = range_midpoints(ranges);

  std::vector<SeedRun> runs(cfg.seeds);
  parallel_for(cfg.seeds, cfg.workers, [&](std::size_t s) {
    Rng rng = make_rng(master_seed, StreamDomain::ScratchSeed, building_id, s);
    std::vector<double> guess_values(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      guess_values[i] = uniform(rng, ranges[i].lo, ranges[i].hi);
    }
    const auto guess = ThermalParams::from_values(topo, guess_values);
    EstimatorNet net(topo, scale, standardization, cfg.shape);
    net.init_random(rng);
    init_to_constant_guess(net, guess, cfg.init_steps, rng, cfg.adam);

    AdamState adam = fresh_adam(net, cfg.adam);
    SeedRun& run = runs[s];
    run.trace.topology = topo;
    run.summary.seed = static_cast<std::uint32_t>(s);
    run.summary.initial_guess = guess_values;
    run_epochs(net, windows, cfg.epochs, adam, rng, cfg.substeps, static_cast<std::uint32_t>(s),
               run.trace, run.summary.skipped);
    run.summary.records = run.trace.size();
    if (run.summary.skipped > 0) {
      log::info("seed " + std::to_string(s) + ": skipped " +
                std::to_string(run.summary.skipped) + " non-finite steps");
    }
  });
  return finish(runs, topo, cfg.histogram_bins);
}

Vector fleet_output_scale(std::span<const BuildingSeries* const> fleet, Topology topo) {
  const std::size_t n = param_count(topo);
  const bool have_truth =
      !fleet.empty() && std::all_of(fleet.begin(), fleet.end(), [](const BuildingSeries* s) {
        return s->truth.has_value();
      });
  if (!have_truth) return range_midpoints(default_init_ranges(topo));
  std::vector<std::vector<double>> cols(n);
  for (const auto* s : fleet) {
    const ThermalParams& t = *s->truth;
    std::vector<double> v;
    if (t.topology() == topo) {
      v = t.to_vector();
    } else if (topo == Topology::OneROneC) {
      v = {t[p2r2c::R_ie] + t[p2r2c::R_ea], t[p2r2c::C_i] + t[p2r2c::C_e], t[p2r2c::A_eff]};
    } else {
      return range_midpoints(default_init_ranges(topo));
    }
    for (std::size_t i = 0; i < n; ++i) cols[i].push_back(v[i]);
  }
  Vector scale(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = cols[i];
    std::sort(c.begin(), c.end());
    const std::size_t m = c.size();
    const double median = m % 2 ? c[m / 2] : 0.5 * (c[m / 2 - 1] + c[m / 2]);
    scale(static_cast<Eigen::Index>(i)) = median / std::log(2.0);
  }
  return scale;
}

EstimatorNet make_pretrain_net(std::span<const BuildingSeries* const> fleet, Topology topo,
                               const Vector& output_scale, const NetShape& shape,
                               std::uint64_t master_seed) {
  if (fleet.empty()) throw InvalidInput("pretrain: empty fleet");
  EstimatorNet net(topo, output_scale, Standardization::fit(fleet), shape);
  Rng rng = make_rng(master_seed, StreamDomain::NetInit, 0, 0);
  net.init_random(rng);
  return net;
}

PretrainResult pretrain(EstimatorNet net, std::span<const BuildingSeries* const> fleet,
                        const EstimatorConfig& cfg, std::uint64_t master_seed) {
  if (fleet.empty()) throw InvalidInput("pretrain: empty fleet");
  if (cfg.pretrain_batch == 0) throw InvalidInput("pretrain: batch size must be >= 1");
  std::vector<TrainingWindow> windows;
  for (const auto* s : fleet) {
    s->validate();
    check_window_fits(net, s->size());
    auto w = slice_windows(*s, net.shape().lookback, cfg.window_stride);
    windows.insert(windows.end(), w.begin(), w.end());
  }

  Rng rng = make_rng(master_seed, StreamDomain::Pretrain, 0, 0);
  AdamState adam = fresh_adam(net, cfg.adam);
  StepWorkspace ws;
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  PretrainResult result{net, {}};
  EstimatorNet& model = result.net;

  for (std::size_t e = 0; e < cfg.pretrain_epochs; ++e) {
    shuffle(order.begin(), order.end(), rng);
    PretrainEpoch row;
    row.epoch = e;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.pretrain_batch) {
      const std::size_t end = std::min(order.size(), b + cfg.pretrain_batch);
      ws.tape.clear();
      const auto leaves = model.bind(ws.tape);
      Var acc = 0.0;
      std::size_t count = 0;
      for (std::size_t j = b; j < end; ++j) {
        std::array<double, 5> theta{};
        const Var loss =
            record_window_loss(model, ws.tape, leaves, windows[order[j]], cfg.substeps, &theta);
        if (!std::isfinite(loss.value()) ||
            !all_positive_finite(std::span<const double>(theta.data(), model.output_size()))) {
          ++row.skipped;
          continue;
        }
        acc = acc + loss;
        loss_sum += loss.value();
        ++count;
      }
      if (count == 0) continue;
      const Var mean = acc * (1.0 / static_cast<double>(count));
      const auto table = ws.tape.backward(mean);
      if (!apply_gradients(model, table, leaves, ws, adam)) {
        log::debug("pretrain: non-finite batch gradient; update skipped");
        continue;
      }
      row.examples += count;
    }
    row.mean_loss = row.examples > 0 ? loss_sum / static_cast<double>(row.examples)
                                     : std::numeric_limits<double>::quiet_NaN();
    log::info("pretrain epoch " + std::to_string(e) + ": mean loss " +
              std::to_string(row.mean_loss) + " over " + std::to_string(row.examples) +
              " windows");
    result.curve.push_back(row);
  }
  return result;
}

EstimationResult finetune(const EstimatorNet& pretrained, const BuildingSeries& series,
                          const EstimatorConfig& cfg, std::uint64_t master_seed,
                          std::uint64_t building_id) {
  series.validate();
  check_window_fits(pretrained, series.size());
  const auto windows = slice_windows(series, pretrained.shape().lookback, cfg.window_stride);
  std::vector<SeedRun> runs(1);
  SeedRun& run = runs[0];
  run.trace.topology = pretrained.topology();
  run.summary.seed = 0;

  if (cfg.epochs == 0) {
    for (const auto& w : windows) {
      const Vector theta = pretrained.forward(pretrained.input_features(w));
      const std::span<const double> tv(theta.data(), theta.size());
      const double loss = window_loss(pretrained.topology(), tv, w, cfg.substeps);
      if (!std::isfinite(loss) || !all_positive_finite(tv)) {
        ++run.summary.skipped;
        continue;
      }
      TraceRecord rec;
      std::copy(tv.begin(), tv.end(), rec.theta.begin());
      rec.loss = loss;
      run.trace.records.push_back(rec);
    }
  } else {
    EstimatorNet net = pretrained;
    AdamState adam = fresh_adam(net, cfg.adam);
    Rng rng = make_rng(master_seed, StreamDomain::Finetune, building_id, 0);
    run_epochs(net, windows, cfg.epochs, adam, rng, cfg.substeps, 0, run.trace,
               run.summary.skipped);
  }
  run.summary.records = run.trace.size();
  return finish(runs, pretrained.topology(), cfg.histogram_bins);
}

double mean_window_loss(const EstimatorNet& net, std::span<const TrainingWindow> windows,
                        int substeps) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : windows) {
    const Vector theta = net.forward(net.input_features(w));
    const double loss =
        window_loss(net.topology(), std::span<const double>(theta.data(), theta.size()), w,
                    substeps);
    if (!std::isfinite(loss)) continue;
    sum += loss;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace rcid
