#pragma once

// CSV ingestion and emission of building series.
//
// Format: header `timestamp,T_in,T_out,Q_solar,u_heat`, one row per
// 15-minute sample, ISO-8601 UTC timestamps (YYYY-MM-DDTHH:MM:SSZ), decimal
// point, no thousands separators. Doubles are written in shortest round-trip
// form so that write -> read is lossless.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rcid/series.hpp"

namespace rcid {

std::string format_iso8601(std::int64_t epoch_seconds);
// Accepts YYYY-MM-DDTHH:MM:SS with an optional trailing 'Z'. Throws
// InvalidInput on malformed text.
std::int64_t parse_iso8601(std::string_view text);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

void write_series_csv(const std::filesystem::path& path, const BuildingSeries& series);

// Throws ParseError naming the file and the offending line for malformed
// rows, non-uniform 900 s cadence or a wrong header; IoError when the file
// cannot be opened. Ground truth is never read from CSV.
BuildingSeries read_series_csv(const std::filesystem::path& path);

}  // namespace rcid
