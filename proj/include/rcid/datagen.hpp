#pragma once

// Synthetic building fleet: specs, weather, thermostat and closed-loop
// ground-truth simulation with a 2R2C model.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rcid/rc_models.hpp"
#include "rcid/rng.hpp"
#include "rcid/series.hpp"

namespace rcid {

enum class WeatherProfile : int { Maritime = 0, Continental = 1, Alpine = 2 };

struct BuildingSpec {
  double u_wall = 0.5;      // W/(m²K)
  double c_wall = 150.0;    // kJ/(m²K)
  double f_win = 0.15;      // window-to-wall ratio
  double a_ground = 100.0;  // m²
  double t_sp_day = 21.0;   // °C
  double dt_night = 2.0;    // K
  WeatherProfile weather = WeatherProfile::Maritime;
  double occupancy_gain = 0.3;  // kW while occupied

  // U_wall in [0.1, 1.5], c_wall in [30, 300], f_win in (0, 0.5),
  // A_ground > 0, dT_night >= 0, occupancy gain >= 0.
  void validate() const;
  friend bool operator==(const BuildingSpec&, const BuildingSpec&) = default;
};

// Geometry of the square two-story box behind spec_to_truth_params.
struct EnvelopeGeometry {
  double side;        // m
  double height;      // m
  double wall_area;   // m², the heat-exchanging envelope
  double floor_area;  // m², both stories
};

EnvelopeGeometry envelope_geometry(const BuildingSpec& spec);

// Ground-truth 2R2C parameters of a spec.
ThermalParams spec_to_truth_params(const BuildingSpec& spec);

struct WeatherSeries {
  std::vector<double> t_out;    // °C
  std::vector<double> q_solar;  // kW/m²
};

struct WeatherProfileParams {
  double mean;       // °C
  double amplitude;  // °C, diurnal half-swing
  double peak_irr;   // kW/m², clear-sky noon irradiation
  double ar_coeff;   // AR(1) coefficient per sample
  double ar_sigma;   // innovation std, °C
  double sunrise_h;  // local hour
  double sunset_h;
};

WeatherProfileParams weather_profile_params(WeatherProfile p);

// Noise-free part of T_out at sample k (seasonal mean + diurnal sinusoid).
double t_out_deterministic(WeatherProfile profile, std::size_t k);

// days * 96 samples starting at midnight. T_out adds AR(1) noise to
// t_out_deterministic; Q_solar is a half-sine between sunrise and sunset
// scaled by a per-day cloudiness factor.
WeatherSeries synth_weather(WeatherProfile profile, std::size_t days, std::uint64_t seed);

struct ThermostatConfig {
  double gain = 0.5;  // kW/K
  double day_start_h = 6.0;
  double day_end_h = 22.0;
};

double setpoint_at(const BuildingSpec& spec, double hour_of_day, const ThermostatConfig& cfg = {});

// u = clip(K (T_sp - T_in), 0, capacity).
double thermostat(double t_in, double setpoint, double capacity, double gain = 0.5);

// Heater capacity that can hold the day setpoint against -12 °C outside
// with 50 % reserve.
double heater_capacity(const BuildingSpec& spec);

struct DatasetOptions {
  double noise_sigma = 0.0;  // °C, added to the recorded T_in only
  bool gains = false;        // unrecorded occupancy gains in the truth dynamics
  double controller_gain = 4.0;  // kW/K
  int substeps = kDefaultSubsteps;
  double t_in0 = std::numeric_limits<double>::quiet_NaN();  // NaN: start at the night setpoint
  // Simulate with these parameters instead of spec_to_truth_params(spec).
  std::optional<ThermalParams> truth_override;
};

BuildingSeries generate_dataset(const BuildingSpec& spec, std::size_t days, std::uint64_t seed,
                                const DatasetOptions& opts = {});

struct SpecRange {
  double lo;
  double hi;
};

struct FleetRanges {
  SpecRange u_wall{0.2, 1.3};
  SpecRange c_wall{40.0, 300.0};
  SpecRange f_win{0.12, 0.25};
  SpecRange a_ground{60.0, 140.0};
  SpecRange t_sp_day{20.0, 23.0};
  SpecRange dt_night{0.0, 3.0};
};

struct FleetMember {
  BuildingSpec spec;
  BuildingSeries series;
  std::uint64_t weather_seed = 0;
};

BuildingSpec sample_spec(Rng& rng, const FleetRanges& ranges);

// Members are generated independently from streams derived from `seed`.
std::vector<FleetMember> generate_fleet(std::size_t n, std::size_t days, std::uint64_t seed,
                                        const FleetRanges& ranges = {},
                                        const DatasetOptions& opts = {}, std::size_t workers = 1);

// The eight-building target suite T1..T8.
std::vector<BuildingSpec> target_suite();

std::string_view to_string(WeatherProfile p);

}  // namespace rcid
