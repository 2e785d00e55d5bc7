// Acceptance gate: one PASS/FAIL line per criterion.
//
//   rcid_acceptance            run every criterion
//   rcid_acceptance 1 4 5      run a subset
//
// Exit status is non-zero when any requested criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rcid/datagen.hpp"
#include "rcid/evalkit.hpp"
#include "rcid/ga_baseline.hpp"
#include "rcid/log.hpp"
#include "rcid/marginals.hpp"
#include "rcid/training.hpp"

#ifndef RCID_CLI_PATH
#define RCID_CLI_PATH "rcid"
#endif

namespace fs = std::filesystem;
using namespace rcid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Metrics test_metrics(const ThermalParams& theta, const BuildingSeries& test) {
  const auto fc = rolling_forecast(theta, test);
  return metrics(fc.predicted, fc.measured, value_range(test.t_in));
}

// ---------------------------------------------------------------------------
// 1. Gradients through estimate -> simulate -> loss against central differences.

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Independent extended-precision forward pass used as the finite-difference
// oracle, so round-off in the difference quotient stays far below the
// tolerance even for gradient components near 1e-7.
using Wide = long double;

Wide softplus_wide(Wide z) { return z > 30 ? z : std::log1p(std::exp(z)); }

Wide reference_loss(const EstimatorNet& net, const TrainingWindow& w) {
  const auto x = net.input_features(w);
  std::vector<Wide> h(x.data(), x.data() + x.size());
  const auto& ts = net.tensors();
  const std::size_t layers = ts.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& wm = ts[2 * l];
    const auto& b = ts[2 * l + 1];
    std::vector<Wide> a(static_cast<std::size_t>(wm.rows()));
    for (Eigen::Index r = 0; r < wm.rows(); ++r) {
      Wide acc = b(r, 0);
      for (Eigen::Index c = 0; c < wm.cols(); ++c) acc += Wide(wm(r, c)) * h[c];
      a[r] = l + 1 == layers ? acc : std::tanh(acc);
    }
    h = std::move(a);
  }
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = net.output_scale()[i] * softplus_wide(h[i]);
  std::vector<Wide> traj;
  const auto label = w.label();
  kernel::simulate_from_origin<Wide>(net.topology(), std::span<const Wide>(h.data(), h.size()),
                                     label[0], w.forcings(), w.lookback(), kDefaultSubsteps,
                                     traj);
  Wide acc = 0;
  for (std::size_t k = 1; k < traj.size(); ++k) acc += (traj[k] - label[k]) * (traj[k] - label[k]);
  return std::sqrt(acc);
}

Outcome criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr int kTrials = 100;
  constexpr double kStep = 1e-4;
  const auto specs = target_suite();
  double worst = 0.0;
  std::size_t checked = 0;
  Rng rng = make_rng(11, StreamDomain::ScratchSeed, 99);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Topology topo = trial % 2 ? Topology::TwoRTwoC : Topology::OneROneC;
    // Small random three-layer nets so every weight can be checked.
    NetShape shape;
    shape.lookback = 8 + uniform_index(rng, 17);
    shape.hidden_layers = 2;
    shape.hidden_width = 4 + uniform_index(rng, 9);
    const auto series = generate_dataset(specs[trial % specs.size()], 2, 500 + trial);
    const BuildingSeries* only[] = {&series};
    std::vector<double> scale_v;
    for (const auto& r : default_init_ranges(topo)) scale_v.push_back(uniform(rng, 0.2, 1.0) * r.hi);
    const diffkit::Vector scale = Eigen::Map<const diffkit::Vector>(scale_v.data(), scale_v.size());
    EstimatorNet net(topo, scale, Standardization::fit(only), shape);
    net.init_random(rng, 1.0);
    const TrainingWindow w(series, uniform_index(rng, series.size() - shape.lookback - 1),
                           shape.lookback);

    diffkit::Tape tape;
    const auto leaves = net.bind(tape);
    const auto loss = record_window_loss(net, tape, leaves, w, kDefaultSubsteps);
    const auto table = tape.backward(loss);
    for (std::size_t t = 0; t < leaves.size(); ++t) {
      const diffkit::Matrix g = table[leaves[t]];
      diffkit::Matrix& p = net.tensors()[t];
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double orig = p(k);
        p(k) = orig + kStep;
        const Wide up = reference_loss(net, w);
        p(k) = orig - kStep;
        const Wide down = reference_loss(net, w);
        p(k) = orig;
        const double fd = static_cast<double>((up - down) / (2.0 * kStep));
        worst = std::max(worst, relative_error(g(k), fd));
        ++checked;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0,
          "max relative error " + fmt(worst, 3) + " over " + std::to_string(checked) +
              " weights in " + std::to_string(kTrials) + " instances (< 1e-4), " + fmt(secs, 3) +
              " s (< 120 s)"};
}

// ---------------------------------------------------------------------------
// 2. GA recovery on a noise-free 1R1C building.

Outcome criterion_ga_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  DatasetOptions opts;
  opts.truth_override = ThermalParams::one_r_one_c(9.09, 8.0, 5.7);
  const auto series = generate_dataset(target_suite()[3], 60, 2024, opts);
  const auto parts = split(series, {48, 12, 0.25});
  const auto est = ga_estimate(parts.train, Topology::OneROneC, GaConfig{}, 8, 7);
  const auto m = test_metrics(est.theta_star, parts.test);
  const double secs = seconds_since(t0);
  return {m.rmse <= 0.3 && secs < 300.0,
          "test RMSE " + fmt(m.rmse) + " C (<= 0.3), " + fmt(secs, 3) + " s (< 300 s)"};
}

// ---------------------------------------------------------------------------
// 3. Neural recovery on a noise-free 2R2C building.

Outcome criterion_neural_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto series = generate_dataset(target_suite()[7], 60, 3031);
  const auto parts = split(series, {48, 12, 0.25});
  const auto est = train_from_scratch(parts.train, Topology::TwoRTwoC, EstimatorConfig{}, 17);
  const auto m = test_metrics(est.theta_star, parts.test);
  const double secs = seconds_since(t0);
  return {m.rmse <= 0.3 && secs < 900.0,
          "test RMSE " + fmt(m.rmse) + " C (<= 0.3), " + fmt(secs, 3) + " s (< 900 s)"};
}

// ---------------------------------------------------------------------------
// 4. Relative improvements quoted in the results.

Outcome criterion_rel_improvement() {
  struct Case {
    double bench, model, expected_pct;
  };
  const Case cases[] = {{1.177, 0.895, 23.96}, {1.100, 0.895, 18.64}, {1.153, 0.584, 49.35}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const double pct = 100.0 * rel_improvement(c.bench, c.model);
    ok = ok && std::abs(pct - c.expected_pct) <= 0.05;
    detail += fmt(pct, 6) + "% vs " + fmt(c.expected_pct) + "%; ";
  }
  detail += "tolerance 0.05 pp";
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 5. Marginal histograms against brute force.

Outcome criterion_marginals() {
  const auto series = generate_dataset(target_suite()[4], 3, 77);
  EstimatorConfig cfg;
  cfg.seeds = 2;
  cfg.epochs = 2;
  cfg.init_steps = 200;
  const auto est = train_from_scratch(series, Topology::TwoRTwoC, cfg, 5);
  const auto& trace = est.trace;
  constexpr std::size_t kBins = 100;
  bool hist_ok = true;
  bool argmax_ok = true;
  for (std::size_t i = 0; i < param_count(trace.topology); ++i) {
    const auto h = marginal_histogram(trace, i, kBins);
    double lo = trace.records[0].theta[i];
    double hi = lo;
    for (const auto& r : trace.records) {
      lo = std::min(lo, r.theta[i]);
      hi = std::max(hi, r.theta[i]);
    }
    std::vector<double> edges(kBins + 1);
    for (std::size_t j = 0; j < kBins; ++j) {
      edges[j] = lo + (hi - lo) * (static_cast<double>(j) / static_cast<double>(kBins));
    }
    edges[kBins] = hi;
    hist_ok = hist_ok && edges == h.edges;
    std::vector<double> weights(kBins, 0.0);
    for (const auto& r : trace.records) {
      for (std::size_t j = 0; j < kBins; ++j) {
        const double x = r.theta[i];
        const bool last = j + 1 == kBins;
        if (x >= edges[j] && (x < edges[j + 1] || (last && x <= edges[j + 1]))) {
          weights[j] += std::exp(-r.loss);
          break;
        }
      }
    }
    hist_ok = hist_ok && weights == h.weights;
    std::size_t best = 0;
    for (std::size_t j = 1; j < kBins; ++j) {
      if (weights[j] > weights[best]) best = j;
    }
    argmax_ok = argmax_ok && est.theta_star[i] == 0.5 * (edges[best] + edges[best + 1]);
  }
  EstimationTrace shifted = trace;
  for (auto& r : shifted.records) r.loss += 3.0;
  const bool shift_ok = select_params(shifted) == est.theta_star;
  return {hist_ok && argmax_ok && shift_ok,
          std::to_string(trace.size()) + " records; brute-force histograms " +
              (hist_ok ? "identical" : "DIFFER") + ", argmax centers " +
              (argmax_ok ? "match" : "DIFFER") + ", loss shift " +
              (shift_ok ? "invariant" : "CHANGES theta*")};
}

// ---------------------------------------------------------------------------
// 6. Pretraining benefit on short targets.

struct HarnessData {
  DatasetOptions opts;
  std::vector<BuildingSeries> fleet;
};

// Base-case harness data: 0.1 C measurement noise, unrecorded occupancy gains.
DatasetOptions harness_options() {
  DatasetOptions o;
  o.noise_sigma = 0.1;
  o.gains = true;
  return o;
}

std::vector<BuildingSeries> source_fleet(std::size_t n, std::size_t days, std::uint64_t seed) {
  auto members = generate_fleet(n, days, seed, {}, harness_options());
  std::vector<BuildingSeries> out;
  for (auto& m : members) out.push_back(std::move(m.series));
  return out;
}

EstimatorNet pretrained_net(const std::vector<BuildingSeries>& fleet, Topology topo,
                            const EstimatorConfig& cfg, std::uint64_t seed) {
  std::vector<const BuildingSeries*> ptrs;
  for (const auto& s : fleet) ptrs.push_back(&s);
  auto net = make_pretrain_net(ptrs, topo, fleet_output_scale(ptrs, topo), cfg.shape, seed);
  return pretrain(std::move(net), ptrs, cfg, seed).net;
}

Outcome criterion_pretraining_benefit() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::size_t kTrials = 10;
  EstimatorConfig cfg;
  cfg.pretrain_epochs = 10;
  const auto fleet = source_fleet(20, 30, 606);
  const EstimatorNet net = pretrained_net(fleet, Topology::TwoRTwoC, cfg, 606);

  // Targets come from the same spec distribution through a disjoint stream.
  const auto targets = generate_fleet(kTrials, 24, 6060, {}, harness_options());
  std::size_t wins = 0;
  std::string rows;
  for (std::size_t t = 0; t < kTrials; ++t) {
    const auto parts = split(targets[t].series, {12, 12, 0.25});
    const auto ft = finetune(net, parts.train, cfg, 61, t);
    const auto sc = train_from_scratch(parts.train, Topology::TwoRTwoC, cfg, 61, t);
    const double r_ft = test_metrics(ft.theta_star, parts.test).rmse;
    const double r_sc = test_metrics(sc.theta_star, parts.test).rmse;
    if (r_ft < r_sc) ++wins;
    rows += " " + fmt(r_ft, 3) + "/" + fmt(r_sc, 3);
  }
  const double secs = seconds_since(t0);
  return {wins >= 7 && secs < 2700.0,
          "pretrained beats scratch in " + std::to_string(wins) + "/10 trials (>= 7), rmse " +
              "pretrained/scratch:" + rows + ", " + fmt(secs, 4) + " s (< 2700 s)"};
}

// ---------------------------------------------------------------------------
// 7. 2R2C vs 1R1C estimator on the target suite at 48 days.

Outcome criterion_topology_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  EstimatorConfig cfg;
  cfg.pretrain_epochs = 10;
  const auto fleet = source_fleet(20, 30, 707);
  const EstimatorNet net1 = pretrained_net(fleet, Topology::OneROneC, cfg, 707);
  const EstimatorNet net2 = pretrained_net(fleet, Topology::TwoRTwoC, cfg, 707);

  const auto specs = target_suite();
  std::vector<BuildingSeries> data;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    data.push_back(generate_dataset(specs[i], 60, derive_seed(707, StreamDomain::Targets, i),
                                    harness_options()));
  }
  std::vector<SweepBuilding> buildings;
  for (std::size_t i = 0; i < data.size(); ++i) {
    buildings.push_back({"T" + std::to_string(i + 1), &data[i]});
  }
  SweepConfig sc;
  sc.methods = {Method::Pretrained};
  sc.topologies = {Topology::OneROneC, Topology::TwoRTwoC};
  sc.train_days = {48};
  sc.estimator = cfg;
  sc.master_seed = 707;
  sc.pretrained = {{Topology::OneROneC, &net1}, {Topology::TwoRTwoC, &net2}};
  const auto report = sweep(buildings, sc);

  double mean1 = NAN;
  double mean2 = NAN;
  for (const auto& a : report.aggregates) {
    if (a.buildings != specs.size()) continue;
    (a.topology == Topology::OneROneC ? mean1 : mean2) = a.rmse;
  }
  std::string rows;
  for (const auto& c : report.cells) {
    rows += " " + c.building + "/" + std::string(to_string(c.topology)) + "=" +
            (c.ok ? fmt(c.metrics.rmse, 3) : "fail");
  }
  const double secs = seconds_since(t0);
  const bool ok = report.all_ok() && mean2 <= mean1;
  return {ok, "mean RMSE 2R2C " + fmt(mean2) + " vs 1R1C " + fmt(mean1) + " (2R2C <= 1R1C);" +
                  rows + "; " + fmt(secs, 4) + " s"};
}

// ---------------------------------------------------------------------------
// 8. Euler against the closed-form 1R1C free response.

double free_cooling_error(int substeps) {
  // Time constant of the 1R1C recovery fixture (about 73 h).
  const auto p = ThermalParams::one_r_one_c(9.09, 8.0, 5.7);
  const std::size_t n = 96;
  const std::vector<double> t_out(n, 0.0);
  const std::vector<double> zeros(n, 0.0);
  const Forcings f{t_out, zeros, zeros};
  const auto traj = simulate(p, {20.0, std::nullopt}, f, n, {substeps});
  const double tau = 9.09 * 8.0 * kSecondsPerHour;  // s
  double worst = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double exact = 20.0 * std::exp(-static_cast<double>(k) * kSampleSeconds / tau);
    worst = std::max(worst, std::abs(traj[k] - exact) / exact);
  }
  return worst;
}

Outcome criterion_integrator() {
  const double e4 = free_cooling_error(4);
  const double e8 = free_cooling_error(8);
  const double ratio = e4 / e8;
  return {e4 < 1e-3 && ratio > 1.8 && ratio < 2.2,
          "relative error " + fmt(e4, 3) + " at 4 substeps (< 1e-3), " + fmt(e8, 3) +
              " at 8, ratio " + fmt(ratio) + " (1.8 .. 2.2)"};
}

// ---------------------------------------------------------------------------
// 9. CLI determinism.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

int run(const std::string& args) {
  const std::string cmd = std::string(RCID_CLI_PATH) + " " + args + " --log-level warn";
  return std::system(cmd.c_str());
}

Outcome criterion_cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "rcid_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "config.json";
  {
    std::ofstream out(cfg);
    out << R"({
  "topology": "2R2C",
  "method": "scratch",
  "methods": ["scratch", "ga"],
  "topologies": ["1R1C", "2R2C"],
  "train_days": 12,
  "train_lengths": [12],
  "generate": {"kind": "targets", "size": 2, "days": 24, "noise_sigma": 0.1, "gains": true},
  "estimator": {"seeds": 2, "epochs": 1, "init_steps": 100, "window_stride": 8},
  "ga": {"population": 12, "generations": 5, "seeds": 2}
})";
  }
  bool ok = true;
  std::vector<std::string> compared;
  std::map<std::string, std::string> first;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = root / ("run" + std::to_string(rep));
    const std::string common =
        " --config " + cfg.string() + " --seed 42 --workers " + std::to_string(rep + 1);
    ok = ok && run("generate" + common + " --out " + (dir / "data").string()) == 0;
    const std::string target = (dir / "data" / "T1.csv").string();
    for (const char* method : {"scratch", "ga"}) {
      const fs::path out = dir / method;
      ok = ok && run("estimate" + common + " --target " + target + " --method " + method +
                     " --out " + out.string()) == 0;
      ok = ok && run("evaluate" + common + " --target " + target + " --theta " +
                     (out / "theta.json").string() + " --out " + (out / "eval").string()) == 0;
    }
    ok = ok && run("sweep" + common + " --data " + (dir / "data").string() + " --out " +
                   (dir / "sweep").string()) == 0;
    const std::vector<fs::path> files = {
        "scratch/theta.json", "ga/theta.json",  "scratch/eval/report.csv",
        "ga/eval/report.csv", "sweep/report.csv", "sweep/report.json"};
    for (const auto& f : files) {
      const std::string text = slurp(dir / f);
      if (rep == 0) {
        first[f.string()] = text;
        ok = ok && !text.empty();
        compared.push_back(f.string());
      } else {
        ok = ok && text == first[f.string()];
      }
    }
  }
  std::string detail = "byte-identical across two runs (1 vs 2 workers):";
  for (const auto& c : compared) detail += " " + c;
  return {ok, ok ? detail : "outputs differ or a command failed (see " + root.string() + ")"};
}

// ---------------------------------------------------------------------------
// 10. Divider, metrics and split examples.

Outcome criterion_unit_examples() {
  int failed = 0;
  const auto check = [&](bool c) { failed += c ? 0 : 1; };
  check(init_envelope_temp(2.0, 2.0, 20.0, 0.0) == 10.0);
  check(init_envelope_temp(7.3, 0.4, 18.0, 18.0) == 18.0);
  check(init_envelope_temp(3.0, 1.0, 20.0, 0.0) == 5.0);

  const std::vector<double> t4 = {0.0, 1.0, 2.0, 4.0};
  const std::vector<double> p_same = t4;
  const auto m0 = metrics(p_same, t4, value_range(t4));
  check(m0.rmse == 0.0 && m0.nrmse == 0.0 && m0.mae == 0.0);
  std::vector<double> p_off = t4;
  for (auto& v : p_off) v += 0.5;
  const auto m1 = metrics(p_off, t4, value_range(t4));
  check(m1.rmse == 0.5 && m1.mae == 0.5);
  const std::vector<double> p_alt = {1.0, 0.0, 3.0, 3.0};
  const auto m2 = metrics(p_alt, t4, value_range(t4));
  check(m2.rmse == 1.0 && m2.mae == 1.0 && m2.nrmse == 0.25);

  BuildingSeries s;
  const std::size_t n = 60 * kSamplesPerDay;
  for (std::size_t k = 0; k < n; ++k) {
    s.t_in.push_back(20.0 + static_cast<double>(k % 7));
    s.t_out.push_back(static_cast<double>(k));
    s.q_solar.push_back(0.0);
    s.u_heat.push_back(1.0);
  }
  const auto parts = split(s, {48, 12, 0.25});
  check(parts.train.size() == 48 * 96 && parts.test.size() == 12 * 96);
  check(parts.validation.size() == 12 * 96 && parts.validation.t_out.front() == 36.0 * 96);
  check(parts.test.t_out.front() == 48.0 * 96);
  bool threw = false;
  try {
    split(s, {72, 12, 0.25});
  } catch (const InvalidInput&) {
    threw = true;
  }
  check(threw);
  std::vector<double> joined = parts.train.t_out;
  joined.insert(joined.end(), parts.test.t_out.begin(), parts.test.t_out.end());
  check(joined == s.t_out);
  return {failed == 0, std::to_string(14 - failed) + "/14 examples hold exactly"};
}

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::Warn);
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"gradient correctness", criterion_gradients}},
      {2, {"GA exact recovery", criterion_ga_recovery}},
      {3, {"neural exact recovery", criterion_neural_recovery}},
      {4, {"relative-improvement arithmetic", criterion_rel_improvement}},
      {5, {"marginalization oracle", criterion_marginals}},
      {6, {"pretraining benefit", criterion_pretraining_benefit}},
      {7, {"topology ordering", criterion_topology_ordering}},
      {8, {"integrator oracle", criterion_integrator}},
      {9, {"CLI determinism", criterion_cli_determinism}},
      {10, {"divider, metric and split examples", criterion_unit_examples}},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (const auto& [k, v] : criteria) wanted.push_back(k);
  }
  int failures = 0;
  for (const int k : wanted) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::cout << "criterion " << k << ": unknown\n";
      ++failures;
      continue;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << k << " [" << it->second.first << "]: " << (o.pass ? "PASS" : "FAIL")
              << " | " << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
