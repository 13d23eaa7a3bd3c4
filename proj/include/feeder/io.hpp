#pragma once

// Config loading and report/plan serialization. Needs nlohmann/json
// ("json.hpp") on the include path.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "feeder/experiments.hpp"
#include "feeder/netgen.hpp"

namespace feeder {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- reading --------------------------------------------------------------

// Tabulated density CSV: the header row holds x coordinates after a leading
// label cell; each following row is y, then one value per x.
inline GridDensity read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open demand grid " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  auto number = [&](const std::string& s) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw ConfigError("demand grid " + path.string() + ": bad number '" + s + "'");
    }
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("demand grid " + path.string() + " is empty");
  auto head = split(line);
  if (head.size() < 2) throw ConfigError("demand grid " + path.string() + ": header needs x coordinates");
  GridDensity g;
  for (std::size_t k = 1; k < head.size(); ++k) g.xs.push_back(number(head[k]));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (cells.size() != head.size()) throw ConfigError("demand grid " + path.string() + ": ragged row");
    g.ys.push_back(number(cells[0]));
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(number(cells[k]));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("demand grid " + path.string() + " has no rows");
  g.values = Grid2(static_cast<int>(g.xs.size()), static_cast<int>(g.ys.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < g.xs.size(); ++i) g.values(static_cast<int>(i), static_cast<int>(j)) = rows[j][i];
  return g;
}

namespace detail {

template <class T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline void read_params(const Json& j, ModelParams& p) {
  static const char* known[] = {"region_length", "region_width", "value_of_time", "stop_cost", "dwell_per_stop",
                                "alight_time", "board_time", "walk_speed", "bus_speed", "transfer_to_trunk",
                                "transfer_to_feeder", "min_headway", "max_headway", "trunk_headway", "tolerance",
                                "walk_radius", "min_capacity", "max_capacity", "nx", "ny"};
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ConfigError("params: unknown key '" + k + "'");
  }
  read_if(j, "region_length", p.region_length);
  read_if(j, "region_width", p.region_width);
  read_if(j, "value_of_time", p.value_of_time);
  read_if(j, "stop_cost", p.stop_cost);
  read_if(j, "dwell_per_stop", p.dwell_per_stop);
  read_if(j, "alight_time", p.alight_time);
  read_if(j, "board_time", p.board_time);
  read_if(j, "walk_speed", p.walk_speed);
  read_if(j, "bus_speed", p.bus_speed);
  read_if(j, "transfer_to_trunk", p.transfer_to_trunk);
  read_if(j, "transfer_to_feeder", p.transfer_to_feeder);
  read_if(j, "min_headway", p.min_headway);
  read_if(j, "max_headway", p.max_headway);
  read_if(j, "trunk_headway", p.trunk_headway);
  read_if(j, "tolerance", p.tolerance);
  read_if(j, "walk_radius", p.walk_radius);
  read_if(j, "min_capacity", p.min_capacity);
  read_if(j, "max_capacity", p.max_capacity);
  read_if(j, "nx", p.nx);
  read_if(j, "ny", p.ny);
}

inline void read_axis(const Json& j, RelativeAxis& a) {
  read_if(j, "mean", a.mean);
  if (j.contains("sigma")) {
    if (j.at("sigma").is_null())
      a.sigma.reset();
    else
      a.sigma = j.at("sigma").get<double>();
  }
}

inline void read_direction(const Json& j, DirectionSpec& d, const std::filesystem::path& base) {
  if (j.contains("grid")) {
    d.grid = read_grid_csv(base / j.at("grid").get<std::string>());
    return;
  }
  read_if(j, "total", d.total);
  if (j.contains("x")) read_axis(j.at("x"), d.x);
  if (j.contains("y")) read_axis(j.at("y"), d.y);
}

}  // namespace detail

// Parses a scenario. JSON with // and /* */ comments is accepted; every field
// is optional and falls back to the reference defaults. Relative paths are
// resolved against `base`.
inline ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base = ".") {
  Json j;
  try {
    j = Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ScenarioConfig c;
  try {
    detail::read_if(j, "name", c.name);
    if (j.contains("params")) detail::read_params(j.at("params"), c.params);
    if (j.contains("demand")) {
      const auto& d = j.at("demand");
      if (d.contains("both")) {
        detail::read_direction(d.at("both"), c.demand.collection, base);
        c.demand.distribution = c.demand.collection;
      }
      if (d.contains("collection")) detail::read_direction(d.at("collection"), c.demand.collection, base);
      if (d.contains("distribution")) detail::read_direction(d.at("distribution"), c.demand.distribution, base);
    }
    if (j.contains("design_class")) c.design_class = design_class_from_string(j.at("design_class").get<std::string>());
    detail::read_if(j, "compare_classes", c.compare_classes);
    if (j.contains("coordination")) {
      const auto m = j.at("coordination").get<std::string>();
      if (m == "all")
        c.all_modes = true;
      else
        c.mode = coordination_from_string(m);
    }
    if (j.contains("capacity") && !j.at("capacity").is_null()) c.capacity = j.at("capacity").get<int>();
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      if (s.contains("axis")) c.axis = sweep_axis_from_string(s.at("axis").get<std::string>());
      detail::read_if(s, "values", c.values);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::read_if(s, "max_outer", c.max_outer);
      detail::read_if(s, "max_inner", c.max_inner);
      detail::read_if(s, "workers", c.workers);
      if (s.contains("seed") && !s.at("seed").is_null()) c.seed = s.at("seed").get<std::uint64_t>();
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  const auto problems = validate(c);
  if (!problems.empty()) throw ConfigError("invalid config: " + problems.front());
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
}

// ---- writing --------------------------------------------------------------

// Stable column names for every cost component, in reporting order.
inline std::vector<std::pair<const char*, double>> cost_fields(const CostBreakdown& c) {
  return {{"C_s", c.stops},          {"C_vk", c.vehicle_km},      {"C_vh", c.vehicle_hours},
          {"V_h1", c.fleet_moving},  {"V_h2", c.fleet_stopping},  {"V_h3", c.fleet_boarding},
          {"C_A", c.access},         {"C_Wp", c.wait_p},          {"C_Wd", c.wait_d},
          {"C_W", c.wait},           {"C_T1", c.ride_distance},   {"C_T2", c.ride_stops},
          {"C_T3", c.ride_boarding}, {"C_T", c.ride},             {"AC", c.agency},
          {"UC", c.user},            {"GC", c.generalized}};
}

inline Json to_json(const CostBreakdown& c) {
  Json j = Json::object();
  for (const auto& [k, v] : cost_fields(c)) j[k] = v;
  return j;
}

inline Json to_json(const ModelParams& p) {
  return Json{{"region_length", p.region_length},   {"region_width", p.region_width},
              {"value_of_time", p.value_of_time},   {"stop_cost", p.stop_cost},
              {"dwell_per_stop", p.dwell_per_stop}, {"alight_time", p.alight_time},
              {"board_time", p.board_time},         {"walk_speed", p.walk_speed},
              {"bus_speed", p.bus_speed},           {"transfer_to_trunk", p.transfer_to_trunk},
              {"transfer_to_feeder", p.transfer_to_feeder}, {"min_headway", p.min_headway},
              {"max_headway", p.max_headway},       {"trunk_headway", p.trunk_headway},
              {"tolerance", p.tolerance},           {"walk_radius", p.walk_radius},
              {"min_capacity", p.min_capacity},     {"max_capacity", p.max_capacity},
              {"nx", p.nx},                         {"ny", p.ny}};
}

inline Json to_json(const Range& r) { return Json{{"min", r.min}, {"mean", r.mean}, {"max", r.max}}; }

inline Json to_json(const DesignSummary& s) {
  return Json{{"H_lp", to_json(s.hp)}, {"H_ld", to_json(s.hd)}, {"S_l", to_json(s.s)},
              {"B", to_json(s.b)},     {"lines", s.lines},      {"stops", s.stops}};
}

inline Json to_json(const DesignGrid& d) {
  Json b = Json::array();
  for (int i = 0; i < d.nx(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < d.ny(); ++j) row.push_back(d.b(i, j));
    b.push_back(std::move(row));
  }
  return Json{{"capacity", d.capacity}, {"mode", to_string(d.mode)}, {"H_lp", d.hp},
              {"H_ld", d.hd},          {"S_l", d.s},                 {"B", std::move(b)}};
}

inline Json to_json(const SolveReport& r, bool with_timing = false) {
  Json hist = Json::array();
  for (const auto& h : r.history)
    hist.push_back(Json{{"outer", h.outer}, {"inner", h.inner}, {"dS", h.s}, {"dH", h.h}, {"dB", h.b}});
  Json j{{"converged", r.converged},
         {"outer_iterations", r.outer_iterations},
         {"inner_iterations", r.inner_iterations},
         {"cost", to_json(r.cost)},
         {"design", to_json(r.design)},
         {"history", std::move(hist)}};
  if (with_timing) j["seconds"] = r.seconds;
  return j;
}

// One row per lattice point.
inline std::string design_csv(const DesignGrid& d, const Lattice& lat) {
  std::ostringstream os;
  os << std::setprecision(12) << "i,j,x,y,H_lp,H_ld,S_l,B\n";
  for (int i = 0; i < d.nx(); ++i)
    for (int j = 0; j < d.ny(); ++j)
      os << i << ',' << j << ',' << lat.x(i) << ',' << lat.y(j) << ',' << d.hp[i] << ',' << d.hd[i] << ','
         << d.s[i] << ',' << d.b(i, j) << '\n';
  return os.str();
}

// Wall times are left out so that the same config always gives the same bytes.
inline Json to_json(const RunResult& r, bool with_design = false) {
  Json j{{"design_class", to_string(r.design_class)},
         {"mode", to_string(r.mode)},
         {"transposed", r.transposed},
         {"capacity", r.capacity},
         {"converged", r.converged},
         {"error", r.error ? Json(*r.error) : Json(nullptr)},
         {"cost", to_json(r.cost)},
         {"summary", to_json(r.summary)},
         {"saving", r.saving ? Json(*r.saving) : Json(nullptr)},
         {"baseline", r.baseline.empty() ? Json(nullptr) : Json(r.baseline)},
         {"coordination_saving", r.coordination_saving ? Json(*r.coordination_saving) : Json(nullptr)},
         {"outer_iterations", r.outer_iterations}};
  Json curve = Json::array();
  for (const auto& c : r.curve)
    curve.push_back(Json{{"K", c.capacity}, {"GC", std::isnan(c.generalized) ? Json(nullptr) : Json(c.generalized)},
                         {"converged", c.converged}});
  j["curve"] = std::move(curve);
  if (with_design) j["design"] = to_json(r.design);
  return j;
}

inline Json to_json(const Report& r, bool with_design = false) {
  Json runs = Json::array();
  for (const auto& x : r.runs) runs.push_back(to_json(x, with_design));
  return Json{{"scenario", r.scenario},
              {"axis", to_string(r.axis)},
              {"value", r.value ? Json(*r.value) : Json(nullptr)},
              {"params", to_json(r.params)},
              {"short_side_gain", r.short_side_gain ? Json(*r.short_side_gain) : Json(nullptr)},
              {"error", r.error ? Json(*r.error) : Json(nullptr)},
              {"runs", std::move(runs)}};
}

namespace detail {
inline std::string csv_num(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(12) << *v;
  return os.str();
}
}  // namespace detail

// Flat table across sweep points: one row per solved run.
inline std::string reports_csv(const std::vector<Report>& reports) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "scenario,axis,value,design_class,mode,transposed,capacity,converged";
  const CostBreakdown dummy;
  for (const auto& [k, v] : cost_fields(dummy)) os << ',' << k;
  os << ",H_lp_mean,H_ld_mean,S_l_mean,B_mean,saving,baseline,coordination_saving,short_side_gain,error\n";
  for (const auto& r : reports) {
    auto prefix = [&] { os << r.scenario << ',' << to_string(r.axis) << ',' << detail::csv_num(r.value) << ','; };
    if (r.runs.empty()) {
      prefix();
      os << ",,,,";
      for (std::size_t k = 0; k < cost_fields(dummy).size(); ++k) os << ',';
      os << ",,,,,,,," << '"' << (r.error ? *r.error : "") << "\"\n";
      continue;
    }
    for (const auto& x : r.runs) {
      prefix();
      os << to_string(x.design_class) << ',' << to_string(x.mode) << ',' << (x.transposed ? 1 : 0) << ','
         << x.capacity << ',' << (x.converged ? 1 : 0);
      for (const auto& [k, v] : cost_fields(x.cost)) os << ',' << v;
      os << ',' << x.summary.hp.mean << ',' << x.summary.hd.mean << ',' << x.summary.s.mean << ','
         << x.summary.b.mean << ',' << detail::csv_num(x.saving) << ',' << x.baseline << ','
         << detail::csv_num(x.coordination_saving) << ',' << detail::csv_num(r.short_side_gain) << ",\""
         << (x.error ? *x.error : "") << "\"\n";
    }
  }
  return os.str();
}

inline Json timing_json(const std::vector<Report>& reports) {
  Json out = Json::array();
  for (const auto& r : reports) {
    Json runs = Json::array();
    for (const auto& x : r.runs)
      runs.push_back(Json{{"design_class", to_string(x.design_class)}, {"mode", to_string(x.mode)},
                          {"transposed", x.transposed}, {"seconds", x.seconds}});
    out.push_back(Json{{"value", r.value ? Json(*r.value) : Json(nullptr)}, {"seconds", r.seconds}, {"runs", runs}});
  }
  return out;
}

inline Json to_json(const DiscretePlan& plan) {
  Json lines = Json::array();
  for (const auto& l : plan.lines)
    lines.push_back(Json{{"x", l.x}, {"H_lp", l.hp}, {"H_ld", l.hd}, {"single_stop", l.single_stop}, {"stops", l.stops}});
  return Json{{"length", plan.length}, {"width", plan.width},  {"capacity", plan.capacity},
              {"mode", to_string(plan.mode)}, {"lines", std::move(lines)}, {"warnings", plan.warnings}};
}

// One row per stop.
inline std::string plan_csv(const DiscretePlan& plan) {
  std::ostringstream os;
  os << std::setprecision(12) << "line,x_p,y_q,H_lp,H_ld\n";
  for (std::size_t k = 0; k < plan.lines.size(); ++k)
    for (double y : plan.lines[k].stops)
      os << k << ',' << plan.lines[k].x << ',' << y << ',' << plan.lines[k].hp << ',' << plan.lines[k].hd << '\n';
  return os.str();
}

// Geometry for external plotting: each line's stopping segment and its run
// to the terminal at the origin, plus every stop point.
inline Json plan_plot_data(const DiscretePlan& plan) {
  Json segments = Json::array(), points = Json::array();
  for (std::size_t k = 0; k < plan.lines.size(); ++k) {
    const auto& l = plan.lines[k];
    segments.push_back(Json{{"line", k}, {"kind", "stopping"}, {"from", {l.x, 0.0}}, {"to", {l.x, plan.width}}});
    segments.push_back(Json{{"line", k}, {"kind", "nonstop"}, {"from", {0.0, 0.0}}, {"to", {l.x, 0.0}}});
    for (double y : l.stops) points.push_back(Json{{"line", k}, {"x", l.x}, {"y", y}});
  }
  return Json{{"region", {plan.length, plan.width}}, {"segments", std::move(segments)}, {"stops", std::move(points)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace feeder
