#include "rcid/series_io.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace rcid {

// BuildingSeries members live here next to the CSV code that relies on them.

void BuildingSeries::validate() const {
  const std::size_t n = t_in.size();
  if (n == 0) throw InvalidInput("series: empty");
  if (t_out.size() != n || q_solar.size() != n || u_heat.size() != n) {
    throw InvalidInput("series: column lengths differ");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(t_in[k]) || !std::isfinite(t_out[k]) || !std::isfinite(q_solar[k]) ||
        !std::isfinite(u_heat[k])) {
      throw InvalidInput("series: non-finite value at sample " + std::to_string(k));
    }
    if (q_solar[k] < 0.0) throw InvalidInput("series: negative Q_solar at sample " + std::to_string(k));
    if (u_heat[k] < 0.0) throw InvalidInput("series: negative u_heat at sample " + std::to_string(k));
  }
}

Forcings BuildingSeries::forcings(std::size_t begin, std::size_t len) const {
  if (begin + len > size()) throw InvalidInput("series: forcing range exceeds series length");
  return {std::span<const double>(t_out).subspan(begin, len),
          std::span<const double>(q_solar).subspan(begin, len),
          std::span<const double>(u_heat).subspan(begin, len)};
}

BuildingSeries BuildingSeries::slice(std::size_t begin, std::size_t len) const {
  if (begin + len > size()) throw InvalidInput("series: slice exceeds series length");
  BuildingSeries out;
  out.start_epoch = start_epoch + static_cast<std::int64_t>(begin) * 900;
  const auto cut = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                               v.begin() + static_cast<std::ptrdiff_t>(begin + len));
  };
  out.t_in = cut(t_in);
  out.t_out = cut(t_out);
  out.q_solar = cut(q_solar);
  out.u_heat = cut(u_heat);
  out.truth = truth;
  return out;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  if (!gmtime_r(&t, &tm)) throw InvalidInput("timestamp out of range");
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t parse_iso8601(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':') {
    throw InvalidInput("malformed timestamp '" + std::string(text) + "'");
  }
  const auto field = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    const auto* first = text.data() + pos;
    const auto [p, ec] = std::from_chars(first, first + len, v);
    if (ec != std::errc() || p != first + len) {
      throw InvalidInput("malformed timestamp '" + std::string(text) + "'");
    }
    return v;
  };
  std::tm tm{};
  tm.tm_year = field(0, 4) - 1900;
  tm.tm_mon = field(5, 2) - 1;
  tm.tm_mday = field(8, 2);
  tm.tm_hour = field(11, 2);
  tm.tm_min = field(14, 2);
  tm.tm_sec = field(17, 2);
  if (tm.tm_mon < 0 || tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 ||
      tm.tm_min > 59 || tm.tm_sec > 60) {
    throw InvalidInput("timestamp field out of range in '" + std::string(text) + "'");
  }
  return static_cast<std::int64_t>(timegm(&tm));
}

std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InvalidInput("format_double: conversion failed");
  return std::string(buf, p);
}

void write_series_csv(const std::filesystem::path& path, const BuildingSeries& series) {
  series.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "timestamp,T_in,T_out,Q_solar,u_heat\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    out << format_iso8601(series.start_epoch + static_cast<std::int64_t>(k) * 900) << ','
        << format_double(series.t_in[k]) << ',' << format_double(series.t_out[k]) << ','
        << format_double(series.q_solar[k]) << ',' << format_double(series.u_heat[k]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

double parse_number(std::string_view s, const std::string& file, std::size_t line,
                    const char* column) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(file, line, std::string("invalid number '") + std::string(s) + "' in " +
                                     column);
  }
  if (!std::isfinite(v)) throw ParseError(file, line, std::string("non-finite ") + column);
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                   : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

BuildingSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string file = path.string();
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(file, 1, "missing header");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  if (line != "timestamp,T_in,T_out,Q_solar,u_heat") {
    throw ParseError(file, lineno, "expected header 'timestamp,T_in,T_out,Q_solar,u_heat'");
  }
  BuildingSeries s;
  std::int64_t prev = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      throw ParseError(file, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    }
    std::int64_t ts = 0;
    try {
      ts = parse_iso8601(f[0]);
    } catch (const InvalidInput& e) {
      throw ParseError(file, lineno, e.what());
    }
    if (s.size() == 0) {
      s.start_epoch = ts;
    } else if (ts - prev != 900) {
      throw ParseError(file, lineno, "timestamps must advance by exactly 15 minutes");
    }
    prev = ts;
    s.t_in.push_back(parse_number(f[1], file, lineno, "T_in"));
    s.t_out.push_back(parse_number(f[2], file, lineno, "T_out"));
    const double q = parse_number(f[3], file, lineno, "Q_solar");
    const double u = parse_number(f[4], file, lineno, "u_heat");
    if (q < 0.0) throw ParseError(file, lineno, "Q_solar must be >= 0");
    if (u < 0.0) throw ParseError(file, lineno, "u_heat must be >= 0");
    s.q_solar.push_back(q);
    s.u_heat.push_back(u);
  }
  if (s.size() == 0) throw ParseError(file, lineno, "no data rows");
  return s;
}

}  // namespace rcid
