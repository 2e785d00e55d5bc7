#pragma once

// Lumped RC thermal networks (1R1C and 2R2C) and their fixed-step
// explicit Euler simulation.
//
// Units: resistances K/kW, capacities kWh/K, effective solar area m²,
// irradiation kW/m², heating power kW, temperatures °C. Capacities are
// converted to kJ/K (x3600) internally so that derivatives come out in K/s.
//
// The simulation kernels are templates over the scalar type so the same code
// runs on plain doubles and on diffkit::Var (reverse-mode tape).

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcid/error.hpp"

namespace rcid {

enum class Topology { OneROneC, TwoRTwoC };

constexpr std::size_t param_count(Topology t) {
  return t == Topology::OneROneC ? 3 : 5;
}

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view s);

// Sample period of every series handled by the toolkit.
inline constexpr double kSampleSeconds = 900.0;
inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr int kDefaultSubsteps = 4;

// Parameter slots per topology.
namespace p1r1c {
inline constexpr std::size_t R_ia = 0, C_i = 1, A_eff = 2;
}
namespace p2r2c {
inline constexpr std::size_t R_ie = 0, R_ea = 1, C_i = 2, C_e = 3, A_eff = 4;
}

class ThermalParams {
 public:
  static ThermalParams one_r_one_c(double r_ia, double c_i, double a_eff);
  static ThermalParams two_r_two_c(double r_ie, double r_ea, double c_i, double c_e,
                                   double a_eff);
  // Throws InvalidInput unless values.size() == param_count(t) and every
  // value is finite and strictly positive.
  static ThermalParams from_values(Topology t, std::span<const double> values);

  Topology topology() const noexcept { return topology_; }
  std::size_t size() const noexcept { return param_count(topology_); }
  double operator[](std::size_t i) const { return values_.at(i); }
  std::span<const double> values() const noexcept { return {values_.data(), size()}; }
  std::vector<double> to_vector() const { return {values_.begin(), values_.begin() + size()}; }

  static std::span<const std::string_view> names(Topology t);

  friend bool operator==(const ThermalParams&, const ThermalParams&) = default;

 private:
  ThermalParams(Topology t, std::span<const double> v);

  Topology topology_ = Topology::OneROneC;
  std::array<double, 5> values_{};
};

struct ThermalState {
  double t_in = 0.0;
  std::optional<double> t_e;  // present exactly for 2R2C
};

// Non-owning view over aligned forcing arrays. Sample k drives the step from
// k to k+1 (zero-order hold over one 15-minute period).
struct Forcings {
  std::span<const double> t_out;    // °C
  std::span<const double> q_solar;  // kW/m²
  std::span<const double> u_heat;   // kW

  std::size_t size() const noexcept { return t_out.size(); }
  // Equal non-zero lengths, Q_solar >= 0, u_heat >= 0.
  void validate() const;
};

struct ForcingSample {
  double t_out = 0.0;
  double q_solar = 0.0;
  double u_heat = 0.0;
};

struct SimOptions {
  int substeps = kDefaultSubsteps;
};

// Continuous-time dynamics (K/s). Returns {dT_in/dt} or {dT_in/dt, dT_e/dt}.
std::vector<double> derivative(const ThermalParams& params, const ThermalState& state,
                               const ForcingSample& forcing);

// Voltage-divider initial envelope temperature.
double init_envelope_temp(double r_ie, double r_ea, double t_in0, double t_out0);

// Trajectory of T_in with horizon + 1 entries, trajectory[0] = init.t_in.
std::vector<double> simulate(const ThermalParams& params, const ThermalState& init,
                             const Forcings& forcings, std::size_t horizon,
                             SimOptions opts = {});

// One 15-minute sample step from `state`, returning the new state.
ThermalState advance(const ThermalParams& params, const ThermalState& state,
                     const ForcingSample& forcing, SimOptions opts = {});

// Initial state at a series origin: T_in measured, T_e from the voltage
// divider for 2R2C.
ThermalState origin_state(const ThermalParams& params, double t_in0, double t_out0);

namespace kernel {

// Coefficients of the discretised dynamics with the step length folded in:
//   T_in += (T_x - T_in) * k_in + (A_eff * Q + u) * k_drive
//   T_e  += (T_in - T_e) * k_e_in + (T_out - T_e) * k_e_out          (2R2C)
// where T_x is T_out (1R1C) or T_e (2R2C).
template <typename T>
struct Coefficients {
  T k_in;
  T k_drive;
  T k_e_in;
  T k_e_out;
  T a_eff;
};

template <typename T>
Coefficients<T> make_coefficients(Topology topo, std::span<const T> p, double h) {
  if (topo == Topology::OneROneC) {
    const T c_kj = p[p1r1c::C_i] * kSecondsPerHour;
    return {h / (p[p1r1c::R_ia] * c_kj), h / c_kj, T(0.0), T(0.0), p[p1r1c::A_eff]};
  }
  const T ci_kj = p[p2r2c::C_i] * kSecondsPerHour;
  const T ce_kj = p[p2r2c::C_e] * kSecondsPerHour;
  return {h / (p[p2r2c::R_ie] * ci_kj), h / ci_kj, h / (p[p2r2c::R_ie] * ce_kj),
          h / (p[p2r2c::R_ea] * ce_kj), p[p2r2c::A_eff]};
}

// Advances (t_in, t_e) by one sample using `substeps` Euler substeps.
template <typename T>
void advance_sample(Topology topo, const Coefficients<T>& k, T& t_in, T& t_e, double t_out,
                    double q_solar, double u_heat, int substeps) {
  const T drive = (k.a_eff * q_solar + u_heat) * k.k_drive;
  if (topo == Topology::OneROneC) {
    for (int s = 0; s < substeps; ++s) {
      t_in = t_in + ((t_out - t_in) * k.k_in + drive);
    }
    return;
  }
  for (int s = 0; s < substeps; ++s) {
    const T diff = t_e - t_in;
    const T next_in = t_in + (diff * k.k_in + drive);
    t_e = t_e - diff * k.k_e_in + (t_out - t_e) * k.k_e_out;
    t_in = next_in;
  }
}

template <typename T>
T init_envelope(const T& r_ie, const T& r_ea, double t_in0, double t_out0) {
  return (r_ie * t_out0 + r_ea * t_in0) / (r_ie + r_ea);
}

// Simulates `horizon` samples from t_in0 (and the voltage-divider T_e for
// 2R2C) and writes horizon + 1 values into `out`.
template <typename T>
void simulate_from_origin(Topology topo, std::span<const T> p, double t_in0,
                          const Forcings& f, std::size_t horizon, int substeps,
                          std::vector<T>& out) {
  const double h = kSampleSeconds / substeps;
  const auto k = make_coefficients<T>(topo, p, h);
  T t_in = T(t_in0);
  T t_e = topo == Topology::TwoRTwoC
              ? init_envelope<T>(p[p2r2c::R_ie], p[p2r2c::R_ea], t_in0, f.t_out[0])
              : T(0.0);
  out.clear();
  out.reserve(horizon + 1);
  out.push_back(t_in);
  for (std::size_t i = 0; i < horizon; ++i) {
    advance_sample(topo, k, t_in, t_e, f.t_out[i], f.q_solar[i], f.u_heat[i], substeps);
    out.push_back(t_in);
  }
}

}  // namespace kernel

}  // namespace rcid
