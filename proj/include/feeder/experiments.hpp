#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "feeder/costmodel.hpp"
#include "feeder/demand.hpp"
#include "feeder/designs.hpp"
#include "feeder/parallel.hpp"
#include "feeder/params.hpp"
#include "feeder/solver.hpp"

namespace feeder {

// One axis of a truncated-normal profile, as fractions of the side length so
// that a profile survives changes of region shape. No sigma means uniform.
struct RelativeAxis {
  double mean = 0.0;
  std::optional<double> sigma = 0.25;
};

struct DirectionSpec {
  double total = 1200.0;              // patrons/h before the walking-zone exclusion
  RelativeAxis x;
  RelativeAxis y;
  std::optional<GridDensity> grid;    // tabulated density instead (absolute km, patrons/km^2/h)
};

struct DemandSpec {
  DirectionSpec collection;
  DirectionSpec distribution;

  bool tabulated() const { return collection.grid || distribution.grid; }
};

inline DirectionDensity make_density(const DirectionSpec& d, double L, double W) {
  if (d.grid) return *d.grid;
  auto axis = [](const RelativeAxis& a, double side) {
    return a.sigma ? AxisProfile::normal(a.mean * side, *a.sigma * side) : AxisProfile{a.mean * side, std::nullopt};
  };
  return TruncNormalDensity{d.total, axis(d.x, L), axis(d.y, W)};
}

inline DemandField make_field(const DemandSpec& d, const ModelParams& p) {
  return {p.region_length, p.region_width, p.walk_radius, make_density(d.collection, p.region_length, p.region_width),
          make_density(d.distribution, p.region_length, p.region_width)};
}

enum class SweepAxis { none, capacity, trunk_headway, aspect_ratio, demand_rate, region_size };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::capacity: return "K";
    case SweepAxis::trunk_headway: return "H_t";
    case SweepAxis::aspect_ratio: return "aspect-ratio";
    case SweepAxis::demand_rate: return "demand-rate";
    case SweepAxis::region_size: return "region-size";
  }
  return "none";
}

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  for (auto a : {SweepAxis::none, SweepAxis::capacity, SweepAxis::trunk_headway, SweepAxis::aspect_ratio,
                 SweepAxis::demand_rate, SweepAxis::region_size})
    if (s == to_string(a)) return a;
  throw InvalidParameter("unknown sweep axis '" + s + "'");
}

struct ScenarioConfig {
  std::string name = "scenario";
  ModelParams params;
  DemandSpec demand;
  DesignClass design_class = DesignClass::heterogeneous;
  bool compare_classes = true;    // also solve every more homogeneous class, for the savings chain
  Coordination mode = Coordination::none;
  bool all_modes = false;         // solve none/collect/distribute/both
  std::optional<int> capacity;    // fixed K; empty searches [min_capacity, max_capacity]
  SweepAxis axis = SweepAxis::none;
  std::vector<double> values;     // sweep grid
  int max_outer = 200;
  int max_inner = 500;
  int workers = 0;
  std::optional<std::uint64_t> seed;  // random initial design instead of the default
};

inline std::vector<std::string> validate(const ScenarioConfig& c) {
  std::vector<std::string> out;
  for (const auto& v : validate(c.params)) out.push_back(v.field + ": " + v.rule);
  if (c.axis == SweepAxis::none && !c.values.empty()) out.push_back("sweep values given without an axis");
  if (c.axis != SweepAxis::none && c.values.empty()) out.push_back("sweep axis needs at least one value");
  if (c.capacity && *c.capacity < 1) out.push_back("capacity must be >= 1");
  if (c.max_outer < 1 || c.max_inner < 1) out.push_back("iteration caps must be >= 1");
  for (const auto* d : {&c.demand.collection, &c.demand.distribution}) {
    if (d->grid) continue;
    if (!(d->total >= 0)) out.push_back("demand total must be >= 0");
    for (const auto* a : {&d->x, &d->y})
      if (a->sigma && !(*a->sigma > 0)) out.push_back("demand sigma must be > 0");
  }
  return out;
}

struct Range {
  double min = 0;
  double mean = 0;
  double max = 0;
};

// Table-style summary of a design. Headway means are plain lattice means;
// the line spacing mean is L over the line count and the stop spacing mean is
// route length over the stop count, so both are average gaps.
struct DesignSummary {
  Range hp;  // h
  Range hd;  // h
  Range s;   // km
  Range b;   // km
  double lines = 0;  // integral of dx / S
  double stops = 0;  // integral of dA / (S B)
};

inline DesignSummary summarize(const DesignGrid& d, const Lattice& lat) {
  auto plain = [](const std::vector<double>& v) {
    Range r{v.front(), 0, v.front()};
    for (double x : v) {
      r.min = std::min(r.min, x);
      r.max = std::max(r.max, x);
      r.mean += x;
    }
    r.mean /= v.size();
    return r;
  };
  DesignSummary out;
  out.hp = plain(d.hp);
  out.hd = plain(d.hd);
  out.s = plain(d.s);
  out.b = plain(d.b.values());
  double route = 0;
  for (int i = 0; i < lat.nx; ++i) {
    out.lines += lat.dx() / d.s[i];
    route += lat.dx() * lat.width / d.s[i];
    for (int j = 0; j < lat.ny; ++j) out.stops += lat.cell_area() / (d.s[i] * d.b(i, j));
  }
  out.s.mean = lat.length / out.lines;
  out.b.mean = route / out.stops;
  return out;
}

// One solved design within a report.
struct RunResult {
  DesignClass design_class = DesignClass::heterogeneous;
  Coordination mode = Coordination::none;
  bool transposed = false;             // solved on the region with x and y exchanged
  int capacity = 0;
  bool converged = false;
  std::optional<std::string> error;
  CostBreakdown cost;
  DesignSummary summary;
  std::vector<CapacityPoint> curve;    // GC(K) when K was searched
  std::optional<double> saving;        // (GC_base - GC) / GC_base against `baseline`
  std::string baseline;
  std::optional<double> coordination_saving;  // against the uncoordinated run of the same class
  int outer_iterations = 0;
  double seconds = 0;
  DesignGrid design;
};

struct Report {
  std::string scenario;
  SweepAxis axis = SweepAxis::none;
  std::optional<double> value;
  ModelParams params;                     // as solved at this point
  std::vector<RunResult> runs;
  // Aspect-ratio sweeps: (GC_long - GC_short) / GC_long, where "short" is the
  // layout whose buses stop along the shorter side.
  std::optional<double> short_side_gain;
  std::optional<std::string> error;
  double seconds = 0;

  const RunResult* find(DesignClass c, Coordination m = Coordination::none, bool transposed = false) const {
    for (const auto& r : runs)
      if (r.design_class == c && r.mode == m && r.transposed == transposed) return &r;
    return nullptr;
  }
  bool converged() const {
    if (error) return false;
    for (const auto& r : runs)
      if (!r.converged || r.error) return false;
    return true;
  }
};

// ScenarioConfig with the sweep value folded in.
inline ScenarioConfig at_point(const ScenarioConfig& base, double value) {
  ScenarioConfig c = base;
  c.axis = SweepAxis::none;
  c.values.clear();
  auto& p = c.params;
  switch (base.axis) {
    case SweepAxis::none: break;
    case SweepAxis::capacity:
      if (value < 1 || value != std::floor(value)) throw InvalidParameter("K sweep values must be integers >= 1");
      c.capacity = static_cast<int>(value);
      break;
    case SweepAxis::trunk_headway: p.trunk_headway = value; break;
    case SweepAxis::aspect_ratio: {
      if (!(value > 0)) throw InvalidParameter("aspect ratio must be positive");
      if (c.demand.tabulated()) throw InvalidParameter("aspect-ratio sweep needs a parametric demand");
      const double area = p.region_length * p.region_width;
      p.region_length = std::sqrt(area / value);
      p.region_width = std::sqrt(area * value);
      break;
    }
    case SweepAxis::demand_rate:
      if (!(value >= 0)) throw InvalidParameter("demand rate must be >= 0");
      if (c.demand.tabulated()) throw InvalidParameter("demand-rate sweep needs a parametric demand");
      c.demand.collection.total = value;
      c.demand.distribution.total = value;
      break;
    case SweepAxis::region_size: {
      // Linear scale factor on both sides; totals follow the area so the
      // average density stays put.
      if (!(value > 0)) throw InvalidParameter("region scale must be positive");
      if (c.demand.tabulated()) throw InvalidParameter("region-size sweep needs a parametric demand");
      p.region_length *= value;
      p.region_width *= value;
      c.demand.collection.total *= value * value;
      c.demand.distribution.total *= value * value;
      break;
    }
  }
  return c;
}

namespace detail {

inline RunResult solve_run(const ScenarioConfig& c, const ModelParams& p, const AggregateTables& a, DesignClass cls,
                           Coordination mode) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  out.design_class = cls;
  out.mode = mode;
  SolveOptions opt;
  opt.max_outer = c.max_outer;
  opt.max_inner = c.max_inner;
  try {
    SolveReport rep;
    if (c.capacity) {
      if (c.seed) opt.initial = random_initial_design(p, a.lattice, *c.capacity, mode, *c.seed);
      rep = solve_class(cls, p, a, agency_rates(*c.capacity, p.value_of_time), *c.capacity, mode, opt);
      out.capacity = *c.capacity;
    } else {
      auto solve_for = [&](int K) {
        SolveOptions o = opt;
        if (c.seed) o.initial = random_initial_design(p, a.lattice, K, mode, *c.seed);
        return solve_class(cls, p, a, agency_rates(K, p.value_of_time), K, mode, o);
      };
      auto v = search_capacity(p.min_capacity, p.max_capacity, solve_for, 1);
      out.capacity = v.capacity;
      out.curve = std::move(v.curve);
      rep = std::move(v.report);
    }
    out.converged = rep.converged;
    out.cost = rep.cost;
    out.outer_iterations = rep.outer_iterations;
    out.summary = summarize(rep.design, a.lattice);
    out.design = std::move(rep.design);
    if (!out.converged) out.error = "iteration cap reached";
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline double saving(double base, double gc) { return (base - gc) / base; }

}  // namespace detail

// Solves the configured design class (plus the chain of more homogeneous
// classes and/or all coordination modes when asked) at one parameter point.
inline Report run_scenario(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  Report rep;
  rep.scenario = config.name;
  rep.params = config.params;
  const auto problems = validate(config);
  if (!problems.empty()) {
    rep.error = "invalid scenario: " + problems.front();
    return rep;
  }
  if (config.axis != SweepAxis::none) {
    rep.error = "run_scenario takes a single point; use run_sweep";
    return rep;
  }

  std::vector<DesignClass> classes;
  const DesignClass order[] = {DesignClass::heterogeneous, DesignClass::uniform_stop, DesignClass::uniform_line_stop,
                               DesignClass::fully_uniform};
  bool on = false;
  for (auto c : order) {
    on = on || c == config.design_class;
    if (on && (c == config.design_class || config.compare_classes)) classes.push_back(c);
  }
  std::vector<Coordination> modes = {config.mode};
  if (config.all_modes)
    modes = {Coordination::none, Coordination::collect, Coordination::distribute, Coordination::both};

  struct Job {
    DesignClass cls;
    Coordination mode;
  };
  std::vector<Job> jobs;
  for (auto m : modes)
    for (auto c : classes) jobs.push_back({c, m});

  try {
    const ModelParams p = config.params;
    const DemandField field = make_field(config.demand, p);
    const AggregateTables a = aggregates(field, Lattice::of(p));
    std::function<RunResult(std::size_t)> run = [&](std::size_t k) {
      return detail::solve_run(config, p, a, jobs[k].cls, jobs[k].mode);
    };
    rep.runs = parallel_map(jobs.size(), run, config.workers);
  } catch (const std::exception& e) {
    rep.error = e.what();
  }

  for (auto& r : rep.runs) {
    if (r.error) continue;
    // savings chain: against the next more homogeneous class, same mode
    for (std::size_t k = 0; k + 1 < classes.size(); ++k) {
      if (classes[k] != r.design_class) continue;
      const RunResult* base = rep.find(classes[k + 1], r.mode, r.transposed);
      if (base && !base->error) {
        r.saving = detail::saving(base->cost.generalized, r.cost.generalized);
        r.baseline = to_string(classes[k + 1]);
      }
    }
    if (r.mode != Coordination::none) {
      const RunResult* base = rep.find(r.design_class, Coordination::none, r.transposed);
      if (base && !base->error) r.coordination_saving = detail::saving(base->cost.generalized, r.cost.generalized);
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

namespace detail {

// Solves the requested class on both layouts and records which one wins.
inline Report run_layout_pair(const ScenarioConfig& config) {
  Report rep = run_scenario(config);
  if (rep.error) return rep;
  ModelParams tp = config.params;
  std::swap(tp.region_length, tp.region_width);
  ScenarioConfig tc = config;
  tc.params = tp;
  std::swap(tc.demand.collection.x, tc.demand.collection.y);
  std::swap(tc.demand.distribution.x, tc.demand.distribution.y);
  Report alt = run_scenario(tc);
  if (alt.error) {
    rep.error = "transposed layout: " + *alt.error;
    return rep;
  }
  for (auto& r : alt.runs) {
    r.transposed = true;
    rep.runs.push_back(std::move(r));
  }
  const RunResult* primary = rep.find(config.design_class, config.mode, false);
  const RunResult* other = rep.find(config.design_class, config.mode, true);
  if (primary && other && !primary->error && !other->error) {
    // The primary layout stops along y, which is the shorter side when W <= L.
    const bool primary_short = config.params.region_width <= config.params.region_length;
    const double gs = primary_short ? primary->cost.generalized : other->cost.generalized;
    const double gl = primary_short ? other->cost.generalized : primary->cost.generalized;
    rep.short_side_gain = saving(gl, gs);
  }
  rep.seconds += alt.seconds;
  return rep;
}

}  // namespace detail

// One report per sweep value, in grid order. Failures at a point are recorded
// in that point's report and the sweep carries on.
inline std::vector<Report> run_sweep(const ScenarioConfig& config) {
  if (config.axis == SweepAxis::none) return {run_scenario(config)};
  std::function<Report(std::size_t)> point = [&](std::size_t k) {
    const double v = config.values[k];
    Report rep;
    try {
      ScenarioConfig c = at_point(config, v);
      c.workers = 1;
      rep = config.axis == SweepAxis::aspect_ratio ? detail::run_layout_pair(c) : run_scenario(c);
    } catch (const std::exception& e) {
      rep.scenario = config.name;
      rep.error = e.what();
    }
    rep.axis = config.axis;
    rep.value = v;
    return rep;
  };
  return parallel_map(config.values.size(), point, config.workers);
}

}  // namespace feeder
