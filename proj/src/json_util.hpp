#pragma once

// nlohmann::json helpers shared by the serializers. Not part of the public API.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rcid/error.hpp"
#include "rcid/rc_models.hpp"

namespace rcid::detail {

using Json = nlohmann::ordered_json;

inline Json params_to_json(const ThermalParams& p) {
  Json j;
  j["topology"] = std::string(to_string(p.topology()));
  const auto names = ThermalParams::names(p.topology());
  Json values = Json::object();
  for (std::size_t i = 0; i < p.size(); ++i) values[std::string(names[i])] = p[i];
  j["values"] = values;
  return j;
}

inline ThermalParams params_from_json(const Json& j) {
  const Topology t = parse_topology(j.at("topology").get<std::string>());
  const auto names = ThermalParams::names(t);
  std::vector<double> v;
  for (const auto& n : names) v.push_back(j.at("values").at(std::string(n)).get<double>());
  return ThermalParams::from_values(t, v);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline Json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset -> line number
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n'));
    throw ParseError(path.string(), line, e.what());
  }
}

}  // namespace rcid::detail
