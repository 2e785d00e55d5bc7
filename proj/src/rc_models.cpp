#include "rcid/rc_models.hpp"

#include <cmath>

namespace rcid {

std::string_view to_string(Topology t) {
  return t == Topology::OneROneC ? "1R1C" : "2R2C";
}

Topology parse_topology(std::string_view s) {
  if (s == "1R1C" || s == "1r1c") return Topology::OneROneC;
  if (s == "2R2C" || s == "2r2c") return Topology::TwoRTwoC;
  throw InvalidInput("unknown topology '" + std::string(s) + "' (expected 1R1C or 2R2C)");
}

ThermalParams::ThermalParams(Topology t, std::span<const double> v) : topology_(t) {
  if (v.size() != param_count(t)) {
    throw InvalidInput("ThermalParams: " + std::string(to_string(t)) + " expects " +
                       std::to_string(param_count(t)) + " values, got " +
                       std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] <= 0.0) {
      throw InvalidInput("ThermalParams: " + std::string(names(t)[i]) +
                         " must be finite and strictly positive");
    }
    values_[i] = v[i];
  }
}

ThermalParams ThermalParams::one_r_one_c(double r_ia, double c_i, double a_eff) {
  const std::array v{r_ia, c_i, a_eff};
  return ThermalParams(Topology::OneROneC, v);
}

ThermalParams ThermalParams::two_r_two_c(double r_ie, double r_ea, double c_i, double c_e,
                                         double a_eff) {
  const std::array v{r_ie, r_ea, c_i, c_e, a_eff};
  return ThermalParams(Topology::TwoRTwoC, v);
}

ThermalParams ThermalParams::from_values(Topology t, std::span<const double> values) {
  return ThermalParams(t, values);
}

std::span<const std::string_view> ThermalParams::names(Topology t) {
  static constexpr std::array<std::string_view, 3> k1{"R_ia", "C_i", "A_eff"};
  static constexpr std::array<std::string_view, 5> k2{"R_ie", "R_ea", "C_i", "C_e", "A_eff"};
  if (t == Topology::OneROneC) return k1;
  return k2;
}

void Forcings::validate() const {
  if (t_out.empty()) throw InvalidInput("forcings: empty arrays");
  if (q_solar.size() != t_out.size() || u_heat.size() != t_out.size()) {
    throw InvalidInput("forcings: T_out, Q_solar and u_heat lengths differ");
  }
  for (std::size_t i = 0; i < t_out.size(); ++i) {
    if (!(q_solar[i] >= 0.0)) throw InvalidInput("forcings: Q_solar must be >= 0");
    if (!(u_heat[i] >= 0.0)) throw InvalidInput("forcings: u_heat must be >= 0");
  }
}

namespace {

void check_state(const ThermalParams& params, const ThermalState& state) {
  const bool wants_envelope = params.topology() == Topology::TwoRTwoC;
  if (wants_envelope != state.t_e.has_value()) {
    throw InvalidInput(wants_envelope ? "2R2C state requires an envelope temperature"
                                      : "1R1C state must not carry an envelope temperature");
  }
}

}  // namespace

std::vector<double> derivative(const ThermalParams& params, const ThermalState& state,
                               const ForcingSample& f) {
  check_state(params, state);
  const auto p = params.values();
  if (params.topology() == Topology::OneROneC) {
    const double c = p[p1r1c::C_i] * kSecondsPerHour;
    const double dtin = (f.t_out - state.t_in) / (p[p1r1c::R_ia] * c) +
                        p[p1r1c::A_eff] / c * f.q_solar + f.u_heat / c;
    return {dtin};
  }
  const double ci = p[p2r2c::C_i] * kSecondsPerHour;
  const double ce = p[p2r2c::C_e] * kSecondsPerHour;
  const double te = *state.t_e;
  const double dtin = (te - state.t_in) / (p[p2r2c::R_ie] * ci) +
                      p[p2r2c::A_eff] / ci * f.q_solar + f.u_heat / ci;
  const double dte = (state.t_in - te) / (p[p2r2c::R_ie] * ce) +
                     (f.t_out - te) / (p[p2r2c::R_ea] * ce);
  return {dtin, dte};
}

double init_envelope_temp(double r_ie, double r_ea, double t_in0, double t_out0) {
  if (!(r_ie > 0.0) || !(r_ea > 0.0)) {
    throw InvalidInput("init_envelope_temp: resistances must be strictly positive");
  }
  return kernel::init_envelope<double>(r_ie, r_ea, t_in0, t_out0);
}

ThermalState origin_state(const ThermalParams& params, double t_in0, double t_out0) {
  if (params.topology() == Topology::OneROneC) return {t_in0, std::nullopt};
  return {t_in0, init_envelope_temp(params[p2r2c::R_ie], params[p2r2c::R_ea], t_in0, t_out0)};
}

namespace {

void check_substeps(int substeps) {
  if (substeps < 1) throw InvalidInput("substeps must be >= 1");
}

}  // namespace

std::vector<double> simulate(const ThermalParams& params, const ThermalState& init,
                             const Forcings& forcings, std::size_t horizon, SimOptions opts) {
  check_state(params, init);
  check_substeps(opts.substeps);
  if (horizon == 0) throw InvalidInput("simulate: horizon must be >= 1");
  forcings.validate();
  if (forcings.size() < horizon) {
    throw InvalidInput("simulate: forcings cover " + std::to_string(forcings.size()) +
                       " samples but horizon is " + std::to_string(horizon));
  }
  const auto topo = params.topology();
  const auto k = kernel::make_coefficients<double>(topo, params.values(),
                                                   kSampleSeconds / opts.substeps);
  double t_in = init.t_in;
  double t_e = init.t_e.value_or(0.0);
  std::vector<double> out;
  out.reserve(horizon + 1);
  out.push_back(t_in);
  for (std::size_t i = 0; i < horizon; ++i) {
    kernel::advance_sample(topo, k, t_in, t_e, forcings.t_out[i], forcings.q_solar[i],
                           forcings.u_heat[i], opts.substeps);
    out.push_back(t_in);
  }
  return out;
}

ThermalState advance(const ThermalParams& params, const ThermalState& state,
                     const ForcingSample& f, SimOptions opts) {
  check_state(params, state);
  check_substeps(opts.substeps);
  const auto topo = params.topology();
  const auto k = kernel::make_coefficients<double>(topo, params.values(),
                                                   kSampleSeconds / opts.substeps);
  double t_in = state.t_in;
  double t_e = state.t_e.value_or(0.0);
  kernel::advance_sample(topo, k, t_in, t_e, f.t_out, f.q_solar, f.u_heat, opts.substeps);
  if (topo == Topology::OneROneC) return {t_in, std::nullopt};
  return {t_in, t_e};
}

}  // namespace rcid
