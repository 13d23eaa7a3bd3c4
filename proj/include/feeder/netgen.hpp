#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "feeder/costmodel.hpp"
#include "feeder/demand.hpp"
#include "feeder/parallel.hpp"
#include "feeder/params.hpp"
#include "feeder/solver.hpp"
#include "feeder/spline.hpp"

namespace feeder {

struct Placement {
  std::vector<double> positions;
  double integral = 0;       // total of dz / spacing(z) over the extent
  bool single = false;       // fewer than the rule's first element: one at the median
  bool floored = false;      // the fitted spacing dipped to the positive floor somewhere
};

// Places one element where the cumulative count, integral of dz / spacing(z),
// reaches k + 0.5 (k = 0, 1, ...). Below 1.5 elements in total a single element
// goes at the median of the cumulative count. `reallocate` rescales the
// density so the total is a whole number first.
inline Placement place_by_spacing(const std::function<double(double)>& spacing, double extent,
                                  bool reallocate = false, int panels = 4096) {
  if (!(extent > 0)) throw InvalidParameter("placement: extent must be positive");
  Placement out;
  const double floor = 1e-3 * extent;
  auto density = [&](double z) {
    double s = spacing(z);
    if (!(s > floor)) {
      out.floored = true;
      s = floor;
    }
    return 1.0 / s;
  };
  auto simpson = [&](double a, double b) { return (b - a) / 6.0 * (density(a) + 4 * density(0.5 * (a + b)) + density(b)); };

  const double h = extent / panels;
  std::vector<double> cum(panels + 1, 0.0);
  for (int k = 0; k < panels; ++k) cum[k + 1] = cum[k] + simpson(k * h, (k + 1) * h);
  out.integral = cum.back();

  double scale = 1.0;
  if (reallocate && out.integral >= 0.5) scale = std::round(out.integral) / out.integral;
  auto locate = [&](double target) {
    target /= scale;
    int k = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin()) - 1;
    k = std::clamp(k, 0, panels - 1);
    double lo = k * h, hi = (k + 1) * h;
    for (int it = 0; it < 60; ++it) {
      const double m = 0.5 * (lo + hi);
      (cum[k] + simpson(k * h, m) < target ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
  };

  const double total = out.integral * scale;
  if (total < 1.5) {
    out.single = true;
    out.positions.push_back(locate(0.5 * total));
    return out;
  }
  for (int k = 0; k + 0.5 < total; ++k) out.positions.push_back(locate(k + 0.5));
  return out;
}

// Line positions from the lattice line spacing.
inline Placement place_lines(const std::vector<double>& xs, const std::vector<double>& spacing, double length,
                             bool reallocate = false) {
  NaturalCubicSpline fit(xs, spacing);
  return place_by_spacing(fit, length, reallocate);
}

// Stop positions along x = x_p from the lattice stop spacing. The cubic
// profile is replaced by the bilinear one if it goes nonpositive.
inline Placement place_stops(const GriddedCubic& spacing, double x_p, double width, bool reallocate = false) {
  const auto cubic = spacing.along_y(x_p);
  bool positive = true;
  constexpr int probes = 600;
  for (int k = 0; k <= probes && positive; ++k) positive = cubic(width * k / probes) > 0;
  if (positive) return place_by_spacing(cubic, width, reallocate);
  const auto& ys = spacing.ys();
  const auto col = spacing.bilinear_column(x_p);
  auto linear = [&](double y) {
    if (y <= ys.front()) return col.front();
    if (y >= ys.back()) return col.back();
    const std::size_t j = std::upper_bound(ys.begin(), ys.end(), y) - ys.begin() - 1;
    const double w = (y - ys[j]) / (ys[j + 1] - ys[j]);
    return (1 - w) * col[j] + w * col[j + 1];
  };
  return place_by_spacing(linear, width, reallocate);
}

struct PlanLine {
  double x = 0;               // x_p, km
  std::vector<double> stops;  // y_q ascending, km
  double hp = 0;              // H_lp, h
  double hd = 0;              // H_ld, h
  bool single_stop = false;
};

struct DiscretePlan {
  double length = 0;
  double width = 0;
  int capacity = 0;
  Coordination mode = Coordination::none;
  std::vector<PlanLine> lines;
  std::vector<std::string> warnings;

  std::size_t stop_count() const {
    std::size_t n = 0;
    for (const auto& l : lines) n += l.stops.size();
    return n;
  }
};

struct PlanOptions {
  bool fine_tune = false;  // whole-number reallocation plus post-placement reoptimization
  int eval_nx = 200;
  int eval_ny = 300;
  int workers = 0;
};

namespace detail {

inline double interp_linear(const std::vector<double>& xs, const std::vector<double>& v, double x) {
  if (xs.size() == 1 || x <= xs.front()) return v.front();
  if (x >= xs.back()) return v.back();
  const std::size_t i = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin() - 1;
  const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return (1 - w) * v[i] + w * v[i + 1];
}

inline std::vector<double> lattice_xs(const Lattice& lat) {
  std::vector<double> xs(lat.nx);
  for (int i = 0; i < lat.nx; ++i) xs[i] = lat.x(i);
  return xs;
}

inline std::vector<double> lattice_ys(const Lattice& lat) {
  std::vector<double> ys(lat.ny);
  for (int j = 0; j < lat.ny; ++j) ys[j] = lat.y(j);
  return ys;
}

// Width of the catchment (midpoints between neighbours, or the region edge)
// of the line nearest to x.
inline double catchment_width(const std::vector<double>& lines, double length, double x) {
  std::size_t p = 0;
  for (std::size_t k = 1; k < lines.size(); ++k)
    if (std::abs(x - lines[k]) < std::abs(x - lines[p])) p = k;
  const double lo = p == 0 ? 0.0 : 0.5 * (lines[p - 1] + lines[p]);
  const double hi = p + 1 == lines.size() ? length : 0.5 * (lines[p] + lines[p + 1]);
  return hi - lo;
}

// With line positions fixed, re-solves stop spacing and headways on the
// continuous model using the line spacing the placed lines imply.
inline DesignGrid reoptimize_fixed_lines(DesignGrid d, const std::vector<double>& lines, const AggregateTables& a,
                                         const ModelParams& p, const AgencyRates& r) {
  const auto& lat = a.lattice;
  for (int i = 0; i < lat.nx; ++i) d.s[i] = std::min(catchment_width(lines, p.region_length, lat.x(i)), p.region_length);
  const double eps = p.tolerance;
  for (int k = 0; k < 200; ++k) {
    Grid2 b(lat.nx, lat.ny);
    for (int i = 0; i < lat.nx; ++i)
      for (int j = 0; j < lat.ny; ++j) b(i, j) = update_stop_spacing(i, j, d.s[i], d.hp[i], d.hd[i], a, p, r);
    const auto rates = local_rates(b, a, p, r, d.mode);
    double change = 0;
    for (int i = 0; i < lat.nx; ++i) {
      const auto h = update_headways(i, d.s[i], rates, a, p, d.capacity, d.mode);
      change += std::abs(h.hp - d.hp[i]) + std::abs(h.hd - d.hd[i]);
      d.hp[i] = h.hp;
      d.hd[i] = h.hd;
      for (int j = 0; j < lat.ny; ++j) change += std::abs(b(i, j) - d.b(i, j));
    }
    d.b = std::move(b);
    if (change <= lat.nx * lat.ny * eps) break;
  }
  return d;
}

}  // namespace detail

// Converts a lattice design into explicit lines and stops. Headways are read
// off the design at each line's x and snapped to the coordination pattern.
inline DiscretePlan generate_plan(const DesignGrid& design, const AggregateTables& a, const ModelParams& p,
                                  const AgencyRates& r, const PlanOptions& opt = {}) {
  detail::require_same_lattice(design, a);
  const auto& lat = a.lattice;
  const auto xs = detail::lattice_xs(lat);
  DiscretePlan plan;
  plan.length = p.region_length;
  plan.width = p.region_width;
  plan.capacity = design.capacity;
  plan.mode = design.mode;

  const auto lines = place_lines(xs, design.s, p.region_length, opt.fine_tune);
  if (lines.floored) plan.warnings.push_back("line spacing spline clamped to the positive floor");
  if (lines.single) plan.warnings.push_back("fewer than 1.5 lines implied; single line at the median");

  DesignGrid d = opt.fine_tune ? detail::reoptimize_fixed_lines(design, lines.positions, a, p, r) : design;
  const GriddedCubic stop_fit(xs, detail::lattice_ys(lat), d.b);
  const double ht = p.trunk_headway;
  for (double x : lines.positions) {
    PlanLine line;
    line.x = x;
    const auto stops = place_stops(stop_fit, x, p.region_width, opt.fine_tune);
    line.stops = stops.positions;
    line.single_stop = stops.single;
    if (stops.floored) plan.warnings.push_back("stop spacing clamped to the positive floor on line x=" + std::to_string(x));
    if (stops.single) plan.warnings.push_back("single stop at the median on line x=" + std::to_string(x));
    line.hp = detail::interp_linear(xs, d.hp, x);
    line.hd = detail::interp_linear(xs, d.hd, x);
    if (coordinates_collection(d.mode)) line.hp = std::max(1.0, std::round(line.hp / ht)) * ht;
    if (coordinates_distribution(d.mode)) line.hd = ht;
    plan.lines.push_back(std::move(line));
  }
  return plan;
}

struct DiscreteEvaluation {
  CostBreakdown cost;
  std::vector<double> collection_load;    // patrons on board per bus at the terminal, per line
  std::vector<double> distribution_load;
  double assigned_demand = 0;             // patrons/h assigned to some stop
};

namespace detail {

// Mean of |t - c| for t uniform on [lo, hi].
inline double mean_abs_offset(double lo, double hi, double c) {
  if (c <= lo) return 0.5 * (lo + hi) - c;
  if (c >= hi) return c - 0.5 * (lo + hi);
  return ((c - lo) * (c - lo) + (hi - c) * (hi - c)) / (2 * (hi - lo));
}

inline std::size_t nearest(const std::vector<double>& v, double t) {
  std::size_t k = std::lower_bound(v.begin(), v.end(), t) - v.begin();
  if (k == v.size()) return k - 1;
  if (k > 0 && t - v[k - 1] <= v[k] - t) return k - 1;
  return k;
}

struct ColumnTally {
  std::size_t line = 0;
  std::vector<double> p, d;  // patrons/h per stop of the line
  double walk = 0;           // patron-km/h walked
  double ride_km = 0;        // patron-km/h ridden
};

}  // namespace detail

// Re-evaluates a plan by assigning every cell of a fine lattice to its nearest
// line, then its nearest stop on that line, and costing actual loads.
inline DiscreteEvaluation evaluate_discrete_detail(const DiscretePlan& plan, const DemandField& field,
                                                   const ModelParams& p, const AgencyRates& r,
                                                   const PlanOptions& opt = {}) {
  if (plan.lines.empty()) throw InvalidParameter("evaluate_discrete: plan has no lines");
  std::vector<double> xs;
  for (const auto& l : plan.lines) {
    if (l.stops.empty()) throw InvalidParameter("evaluate_discrete: line without stops");
    xs.push_back(l.x);
  }
  const Lattice lat{plan.length, plan.width, opt.eval_nx, opt.eval_ny};
  const double dx = lat.dx(), dy = lat.dy(), area = lat.cell_area();

  std::function<detail::ColumnTally(std::size_t)> column = [&](std::size_t ci) {
    const int i = static_cast<int>(ci);
    detail::ColumnTally t;
    const double x = lat.x(i);
    t.line = detail::nearest(xs, x);
    const auto& line = plan.lines[t.line];
    t.p.assign(line.stops.size(), 0.0);
    t.d.assign(line.stops.size(), 0.0);
    const double walk_x = detail::mean_abs_offset(x - 0.5 * dx, x + 0.5 * dx, line.x);
    for (int j = 0; j < lat.ny; ++j) {
      const double y = lat.y(j);
      const double lp = field.cell_density(Direction::collection, x - 0.5 * dx, x + 0.5 * dx, y - 0.5 * dy, y + 0.5 * dy) * area;
      const double ld = field.cell_density(Direction::distribution, x - 0.5 * dx, x + 0.5 * dx, y - 0.5 * dy, y + 0.5 * dy) * area;
      if (lp + ld == 0) continue;
      const std::size_t q = detail::nearest(line.stops, y);
      t.p[q] += lp;
      t.d[q] += ld;
      t.walk += (lp + ld) * (walk_x + detail::mean_abs_offset(y - 0.5 * dy, y + 0.5 * dy, line.stops[q]));
      t.ride_km += (lp + ld) * (line.x + line.stops[q]);
    }
    return t;
  };
  const auto tallies = parallel_map(static_cast<std::size_t>(lat.nx), column, opt.workers);

  const std::size_t n = plan.lines.size();
  std::vector<std::vector<double>> P(n), D(n);
  for (std::size_t k = 0; k < n; ++k) {
    P[k].assign(plan.lines[k].stops.size(), 0.0);
    D[k].assign(plan.lines[k].stops.size(), 0.0);
  }
  double walk = 0, ride_km = 0;
  for (const auto& t : tallies) {
    for (std::size_t q = 0; q < t.p.size(); ++q) {
      P[t.line][q] += t.p[q];
      D[t.line][q] += t.d[q];
    }
    walk += t.walk;
    ride_km += t.ride_km;
  }

  const bool cp = coordinates_collection(plan.mode), cd = coordinates_distribution(plan.mode);
  const double ht = p.trunk_headway, W = plan.width, theta = p.value_of_time;
  DiscreteEvaluation ev;
  CostBreakdown& c = ev.cost;
  c.access = walk / p.walk_speed;
  c.ride_distance = ride_km / p.bus_speed;
  double route_km = 0, stop_calls = 0, stop_total = 0, demand = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& line = plan.lines[k];
    double pk = 0, dk = 0;
    for (double v : P[k]) pk += v;
    for (double v : D[k]) dk += v;
    demand += pk + dk;
    ev.collection_load.push_back(pk * line.hp);
    ev.distribution_load.push_back(dk * line.hd);

    const double alight = (cp ? 1.0 : 0.5) * p.alight_time * line.hp * pk;
    c.wait_p += (line.hp / 2 + alight + p.transfer_to_trunk + (cp ? 0.0 : ht / 2)) * pk;
    const double board = (cd ? 1.0 : 0.5) * p.board_time * ht * dk;
    c.wait_d += (p.transfer_to_feeder + (cd ? 0.0 : line.hd / 2) + board) * dk;

    // Stops are ascending in y, so stop q has q stops between it and the terminal.
    double beyond_p = 0, beyond_d = 0, pairs_p = 0, pairs_d = 0;
    for (std::size_t q = line.stops.size(); q-- > 0;) {
      c.ride_stops += p.dwell_per_stop * (P[k][q] + D[k][q]) * (q + 0.5);
      pairs_p += P[k][q] * (beyond_p + 0.5 * P[k][q]);
      pairs_d += D[k][q] * (beyond_d + 0.5 * D[k][q]);
      beyond_p += P[k][q];
      beyond_d += D[k][q];
    }
    c.ride_boarding += p.board_time * line.hp * pairs_p + p.alight_time * line.hd * pairs_d;

    const double freq = 1 / line.hp + 1 / line.hd;
    const double stops = static_cast<double>(line.stops.size());
    route_km += (W + line.x) * freq;
    stop_calls += stops * freq;
    stop_total += stops;
  }
  ev.assigned_demand = demand;
  c.wait = c.wait_p + c.wait_d;
  c.ride = c.ride_distance + c.ride_stops + c.ride_boarding;
  c.stops = p.stop_cost / theta * stop_total;
  c.vehicle_km = r.per_vehicle_km / theta * route_km;
  c.fleet_moving = route_km / p.bus_speed;
  c.fleet_stopping = p.dwell_per_stop * stop_calls;
  c.fleet_boarding = (p.alight_time + p.board_time) * demand;
  c.vehicle_hours = r.per_vehicle_hour / theta * (c.fleet_moving + c.fleet_stopping + c.fleet_boarding);
  c.agency = c.stops + c.vehicle_km + c.vehicle_hours;
  c.user = c.access + c.wait + c.ride;
  c.generalized = c.agency + c.user;
  return ev;
}

inline CostBreakdown evaluate_discrete(const DiscretePlan& plan, const DemandField& field, const ModelParams& p,
                                       const AgencyRates& r, const PlanOptions& opt = {}) {
  return evaluate_discrete_detail(plan, field, p, r, opt).cost;
}

}  // namespace feeder
