#include "rcid/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rcid/parallel.hpp"

namespace rcid {

namespace {

constexpr double kStoryHeight = 2.5;
constexpr int kStories = 2;
constexpr double kInteriorSplit = 0.3;  // share of R_total between air and envelope node
constexpr double kInteriorCapacityPerFloor = 0.04;  // kWh/(K m²)
constexpr double kSolarTransmission = 0.15;
constexpr double kOccupancySwitchProb = 1.0 / 16.0;

double hour_of_sample(std::size_t k) {
  return static_cast<double>(k % kSamplesPerDay) * 24.0 / static_cast<double>(kSamplesPerDay);
}

}  // namespace

std::string_view to_string(WeatherProfile p) {
  switch (p) {
    case WeatherProfile::Maritime: return "maritime";
    case WeatherProfile::Continental: return "continental";
    case WeatherProfile::Alpine: return "alpine";
  }
  return "unknown";
}

void BuildingSpec::validate() const {
  if (!(u_wall >= 0.1 && u_wall <= 1.5)) throw InvalidInput("spec: U_wall must lie in [0.1, 1.5]");
  if (!(c_wall >= 30.0 && c_wall <= 300.0)) {
    throw InvalidInput("spec: c_wall must lie in [30, 300]");
  }
  if (!(f_win > 0.0 && f_win < 0.5)) throw InvalidInput("spec: f_win must lie in (0, 0.5)");
  if (!(a_ground > 0.0) || !std::isfinite(a_ground)) throw InvalidInput("spec: A_ground must be > 0");
  if (!(dt_night >= 0.0)) throw InvalidInput("spec: dT_night must be >= 0");
  if (!std::isfinite(t_sp_day)) throw InvalidInput("spec: T_sp_day must be finite");
  if (!(occupancy_gain >= 0.0)) throw InvalidInput("spec: occupancy gain must be >= 0");
  const int w = static_cast<int>(weather);
  if (w < 0 || w > 2) throw InvalidInput("spec: unknown weather profile");
}

EnvelopeGeometry envelope_geometry(const BuildingSpec& spec) {
  EnvelopeGeometry g{};
  g.side = std::sqrt(spec.a_ground);
  g.height = kStories * kStoryHeight;
  g.wall_area = 4.0 * g.side * g.height;
  g.floor_area = kStories * spec.a_ground;
  return g;
}

ThermalParams spec_to_truth_params(const BuildingSpec& spec) {
  spec.validate();
  const auto g = envelope_geometry(spec);
  const double r_total = 1000.0 / (spec.u_wall * g.wall_area);  // K/kW
  const double c_e = spec.c_wall * g.wall_area / kSecondsPerHour;  // kJ/K -> kWh/K
  const double c_i = kInteriorCapacityPerFloor * g.floor_area;
  const double a_eff = spec.f_win * g.wall_area * kSolarTransmission;
  return ThermalParams::two_r_two_c(kInteriorSplit * r_total, (1.0 - kInteriorSplit) * r_total,
                                    c_i, c_e, a_eff);
}

WeatherProfileParams weather_profile_params(WeatherProfile p) {
  switch (p) {
    case WeatherProfile::Maritime: return {4.0, 3.0, 0.25, 0.97, 0.25, 8.0, 16.5};
    case WeatherProfile::Continental: return {1.0, 5.0, 0.35, 0.97, 0.3, 7.5, 16.5};
    case WeatherProfile::Alpine: return {-1.0, 5.0, 0.40, 0.97, 0.3, 7.5, 16.5};
  }
  throw InvalidInput("unknown weather profile");
}

double t_out_deterministic(WeatherProfile profile, std::size_t k) {
  const auto w = weather_profile_params(profile);
  const double h = hour_of_sample(k);
  return w.mean + w.amplitude * std::cos(2.0 * std::numbers::pi * (h - 15.0) / 24.0);
}

WeatherSeries synth_weather(WeatherProfile profile, std::size_t days, std::uint64_t seed) {
  if (days == 0) throw InvalidInput("synth_weather: days must be >= 1");
  const auto w = weather_profile_params(profile);
  Rng rng = make_rng(seed, StreamDomain::Weather);
  const std::size_t n = days * kSamplesPerDay;
  WeatherSeries out;
  out.t_out.resize(n);
  out.q_solar.resize(n);
  // Start the noise in its stationary distribution.
  double noise = standard_normal(rng) * w.ar_sigma / std::sqrt(1.0 - w.ar_coeff * w.ar_coeff);
  double cloud = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k % kSamplesPerDay == 0) cloud = uniform(rng, 0.15, 1.0);
    if (k > 0) noise = w.ar_coeff * noise + w.ar_sigma * standard_normal(rng);
    out.t_out[k] = t_out_deterministic(profile, k) + noise;
    // Irradiation averaged at the sample midpoint.
    const double h = hour_of_sample(k) + 0.125;
    double q = 0.0;
    if (h > w.sunrise_h && h < w.sunset_h) {
      q = w.peak_irr * cloud *
          std::sin(std::numbers::pi * (h - w.sunrise_h) / (w.sunset_h - w.sunrise_h));
    }
    out.q_solar[k] = std::max(0.0, q);
  }
  return out;
}

double setpoint_at(const BuildingSpec& spec, double hour_of_day, const ThermostatConfig& cfg) {
  const bool day = hour_of_day >= cfg.day_start_h && hour_of_day < cfg.day_end_h;
  return day ? spec.t_sp_day : spec.t_sp_day - spec.dt_night;
}

double thermostat(double t_in, double setpoint, double capacity, double gain) {
  if (!(capacity > 0.0)) throw InvalidInput("thermostat: capacity must be > 0");
  return std::clamp(gain * (setpoint - t_in), 0.0, capacity);
}

double heater_capacity(const BuildingSpec& spec) {
  const auto g = envelope_geometry(spec);
  const double ua = spec.u_wall * g.wall_area / 1000.0;  // kW/K
  return 1.5 * ua * (spec.t_sp_day + 12.0);
}

BuildingSeries generate_dataset(const BuildingSpec& spec, std::size_t days, std::uint64_t seed,
                                const DatasetOptions& opts) {
  spec.validate();
  if (days == 0) throw InvalidInput("generate_dataset: days must be >= 1");
  if (opts.substeps < 1) throw InvalidInput("generate_dataset: substeps must be >= 1");
  if (!(opts.noise_sigma >= 0.0)) throw InvalidInput("generate_dataset: noise sigma must be >= 0");
  if (!(opts.controller_gain > 0.0)) {
    throw InvalidInput("generate_dataset: controller gain must be > 0");
  }
  const ThermalParams truth = opts.truth_override ? *opts.truth_override : spec_to_truth_params(spec);
  const Topology topo = truth.topology();
  const auto weather = synth_weather(spec.weather, days, seed);
  const std::size_t n = days * kSamplesPerDay;
  const double capacity = heater_capacity(spec);
  Rng occ_rng = make_rng(seed, StreamDomain::Occupancy);
  Rng noise_rng = make_rng(seed, StreamDomain::MeasurementNoise);

  BuildingSeries s;
  s.t_out = weather.t_out;
  s.q_solar = weather.q_solar;
  s.t_in.resize(n);
  s.u_heat.resize(n);
  s.truth = truth;

  const double h = kSampleSeconds / opts.substeps;
  const auto k = kernel::make_coefficients<double>(topo, truth.values(), h);
  double t_in = std::isnan(opts.t_in0) ? spec.t_sp_day - spec.dt_night : opts.t_in0;
  double t_e = topo == Topology::TwoRTwoC
                   ? kernel::init_envelope<double>(truth[p2r2c::R_ie], truth[p2r2c::R_ea], t_in,
                                                   s.t_out[0])
                   : 0.0;
  bool occupied = false;
  for (std::size_t i = 0; i < n; ++i) {
    s.t_in[i] = t_in;
    const double sp = setpoint_at(spec, hour_of_sample(i));
    s.u_heat[i] = thermostat(t_in, sp, capacity, opts.controller_gain);
    double gain = 0.0;
    if (opts.gains) {
      if (uniform01(occ_rng) < kOccupancySwitchProb) occupied = !occupied;
      gain = occupied ? spec.occupancy_gain : 0.0;
    }
    kernel::advance_sample<double>(topo, k, t_in, t_e, s.t_out[i], s.q_solar[i],
                                   s.u_heat[i] + gain, opts.substeps);
  }
  if (opts.noise_sigma > 0.0) {
    for (auto& v : s.t_in) v += opts.noise_sigma * standard_normal(noise_rng);
  }
  return s;
}

BuildingSpec sample_spec(Rng& rng, const FleetRanges& r) {
  BuildingSpec s;
  s.u_wall = uniform(rng, r.u_wall.lo, r.u_wall.hi);
  s.c_wall = uniform(rng, r.c_wall.lo, r.c_wall.hi);
  s.f_win = uniform(rng, r.f_win.lo, r.f_win.hi);
  s.a_ground = uniform(rng, r.a_ground.lo, r.a_ground.hi);
  s.t_sp_day = uniform(rng, r.t_sp_day.lo, r.t_sp_day.hi);
  s.dt_night = uniform(rng, r.dt_night.lo, r.dt_night.hi);
  s.weather = static_cast<WeatherProfile>(uniform_index(rng, 3));
  return s;
}

std::vector<FleetMember> generate_fleet(std::size_t n, std::size_t days, std::uint64_t seed,
                                        const FleetRanges& ranges, const DatasetOptions& opts,
                                        std::size_t workers) {
  if (n == 0) throw InvalidInput("generate_fleet: n must be >= 1");
  std::vector<FleetMember> fleet(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Rng rng = make_rng(seed, StreamDomain::FleetSpecs, i);
    FleetMember& m = fleet[i];
    m.spec = sample_spec(rng, ranges);
    m.spec.validate();
    m.weather_seed = derive_seed(seed, StreamDomain::Weather, i);
    m.series = generate_dataset(m.spec, days, m.weather_seed, opts);
  });
  return fleet;
}

std::vector<BuildingSpec> target_suite() {
  using W = WeatherProfile;
  // U_wall, c_wall, f_win, A_ground, T_sp_day, dT_night, weather
  const auto t = [](double u, double c, double f, double a, double sp, double dt, W w) {
    BuildingSpec s;
    s.u_wall = u;
    s.c_wall = c;
    s.f_win = f;
    s.a_ground = a;
    s.t_sp_day = sp;
    s.dt_night = dt;
    s.weather = w;
    return s;
  };
  return {
      t(0.25, 280, 0.19, 100, 21.0, 2.0, W::Maritime),
      t(0.25, 40, 0.16, 70, 22.0, 1.0, W::Continental),
      t(0.55, 150, 0.16, 70, 23.0, 3.0, W::Maritime),
      t(0.55, 280, 0.19, 100, 20.5, 1.5, W::Alpine),
      t(0.85, 150, 0.19, 100, 22.5, 0.5, W::Continental),
      t(0.85, 40, 0.16, 70, 22.0, 2.5, W::Alpine),
      t(1.15, 280, 0.16, 70, 23.0, 0.0, W::Continental),
      t(1.15, 40, 0.19, 100, 23.0, 1.5, W::Maritime),
  };
}

}  // namespace rcid
