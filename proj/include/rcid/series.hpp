#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rcid/rc_models.hpp"

namespace rcid {

// 2025-01-01T00:00:00Z
inline constexpr std::int64_t kDefaultStartEpoch = 1735689600;
inline constexpr std::size_t kSamplesPerDay = 96;

// Aligned 15-minute operational series of one building.
struct BuildingSeries {
  std::int64_t start_epoch = kDefaultStartEpoch;  // seconds since 1970-01-01 UTC
  std::vector<double> t_in;     // °C
  std::vector<double> t_out;    // °C
  std::vector<double> q_solar;  // kW/m²
  std::vector<double> u_heat;   // kW
  std::optional<ThermalParams> truth;

  std::size_t size() const noexcept { return t_in.size(); }

  // Equal column lengths, finite values, non-negative inputs.
  void validate() const;

  // Forcings over [begin, begin + len).
  Forcings forcings(std::size_t begin, std::size_t len) const;

  // Copy of samples [begin, begin + len); start time shifts accordingly.
  BuildingSeries slice(std::size_t begin, std::size_t len) const;
};

}  // namespace rcid
