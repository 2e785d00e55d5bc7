#include <sstream>

#include "json_util.hpp"
#include "rcid/evalkit.hpp"
#include "rcid/series_io.hpp"

namespace rcid {

using detail::Json;

namespace {

Json metrics_json(const Metrics& m) {
  return Json{{"rmse", m.rmse}, {"nrmse", m.nrmse}, {"mae", m.mae}};
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  Json j;
  j["metadata"] = {{"master_seed", r.master_seed},
                   {"config_hash", r.config_hash},
                   {"seeds", r.seeds},
                   {"horizon", r.horizon},
                   {"pooling", r.pooling}};
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json cj{{"building", c.building},
            {"method", std::string(to_string(c.method))},
            {"topology", std::string(to_string(c.topology))},
            {"train_days", c.train_days},
            {"ok", c.ok}};
    if (c.ok) cj["metrics"] = metrics_json(c.metrics);
    if (!c.error.empty()) cj["error"] = c.error;
    if (c.theta) cj["theta"] = detail::params_to_json(*c.theta);
    cells.push_back(cj);
  }
  j["cells"] = cells;
  Json agg = Json::array();
  for (const auto& a : r.aggregates) {
    agg.push_back({{"method", std::string(to_string(a.method))},
                   {"topology", std::string(to_string(a.topology))},
                   {"train_days", a.train_days},
                   {"buildings", a.buildings},
                   {"rmse", a.rmse},
                   {"nrmse", a.nrmse},
                   {"mae", a.mae}});
  }
  j["aggregates"] = agg;
  Json imp = Json::array();
  for (const auto& i : r.improvements) {
    imp.push_back({{"topology", std::string(to_string(i.topology))},
                   {"train_days", i.train_days},
                   {"model", std::string(to_string(i.model))},
                   {"benchmark", std::string(to_string(i.benchmark))},
                   {"rel_improvement", i.value}});
  }
  j["improvements"] = imp;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "building,method,topology,train_days,rmse,nrmse,mae\n";
  for (const auto& c : r.cells) {
    out << c.building << ',' << to_string(c.method) << ',' << to_string(c.topology) << ','
        << c.train_days << ',';
    if (c.ok) {
      out << format_double(c.metrics.rmse) << ',' << format_double(c.metrics.nrmse) << ','
          << format_double(c.metrics.mae);
    } else {
      out << "nan,nan,nan";
    }
    out << '\n';
  }
  return out.str();
}

EvalReport report_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  EvalReport r;
  const auto& md = j.at("metadata");
  r.master_seed = md.at("master_seed").get<std::uint64_t>();
  r.config_hash = md.at("config_hash").get<std::string>();
  r.seeds = md.at("seeds").get<std::size_t>();
  r.horizon = md.at("horizon").get<std::size_t>();
  r.pooling = md.at("pooling").get<std::string>();
  for (const auto& cj : j.at("cells")) {
    CellResult c;
    c.building = cj.at("building").get<std::string>();
    c.method = parse_method(cj.at("method").get<std::string>());
    c.topology = parse_topology(cj.at("topology").get<std::string>());
    c.train_days = cj.at("train_days").get<std::size_t>();
    c.ok = cj.at("ok").get<bool>();
    if (cj.contains("metrics")) {
      const auto& m = cj["metrics"];
      c.metrics = {m.at("rmse").get<double>(), m.at("nrmse").get<double>(),
                   m.at("mae").get<double>()};
    }
    if (cj.contains("error")) c.error = cj["error"].get<std::string>();
    if (cj.contains("theta")) c.theta = detail::params_from_json(cj["theta"]);
    r.cells.push_back(c);
  }
  summarize(r);
  return r;
}

}  // namespace rcid
