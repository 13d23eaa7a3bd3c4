#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "feeder/demand.hpp"
#include "feeder/params.hpp"

namespace feeder {

// Trunk/feeder schedule coordination. Coordinating the collection direction
// forces H_lp to a multiple of H_t; the distribution direction forces H_ld = H_t.
enum class Coordination { none, collect, distribute, both };

inline bool coordinates_collection(Coordination m) { return m == Coordination::collect || m == Coordination::both; }
inline bool coordinates_distribution(Coordination m) {
  return m == Coordination::distribute || m == Coordination::both;
}

inline const char* to_string(Coordination m) {
  switch (m) {
    case Coordination::none: return "none";
    case Coordination::collect: return "collect";
    case Coordination::distribute: return "distribute";
    case Coordination::both: return "both";
  }
  return "none";
}

inline Coordination coordination_from_string(const std::string& s) {
  if (s == "none") return Coordination::none;
  if (s == "collect") return Coordination::collect;
  if (s == "distribute") return Coordination::distribute;
  if (s == "both") return Coordination::both;
  throw InvalidParameter("unknown coordination mode '" + s + "'");
}

// Decision functions sampled on the solver lattice.
struct DesignGrid {
  std::vector<double> hp;  // H_lp(x_i), h
  std::vector<double> hd;  // H_ld(x_i), h
  std::vector<double> s;   // S_l(x_i), km
  Grid2 b;                 // B(x_i, y_j), km
  int capacity = 10;       // K
  Coordination mode = Coordination::none;

  int nx() const { return static_cast<int>(s.size()); }
  int ny() const { return b.ny(); }

  static DesignGrid uniform(const Lattice& lat, double hp, double hd, double s, double b, int capacity,
                            Coordination mode = Coordination::none) {
    DesignGrid d;
    d.hp.assign(lat.nx, hp);
    d.hd.assign(lat.nx, hd);
    d.s.assign(lat.nx, s);
    d.b = Grid2(lat.nx, lat.ny, b);
    d.capacity = capacity;
    d.mode = mode;
    return d;
  }

  bool operator==(const DesignGrid&) const = default;
};

// Every cost component, in hours per operating hour.
struct CostBreakdown {
  double stops = 0;          // C_s
  double vehicle_km = 0;     // C_vk
  double vehicle_hours = 0;  // C_vh
  double fleet_moving = 0;   // V_h1
  double fleet_stopping = 0; // V_h2
  double fleet_boarding = 0; // V_h3
  double access = 0;         // C_A
  double wait_p = 0;         // C_Wp
  double wait_d = 0;         // C_Wd
  double wait = 0;           // C_W
  double ride_distance = 0;  // C_T1
  double ride_stops = 0;     // C_T2
  double ride_boarding = 0;  // C_T3
  double ride = 0;           // C_T
  double agency = 0;         // AC
  double user = 0;           // UC
  double generalized = 0;    // GC

  double fleet() const { return fleet_moving + fleet_stopping + fleet_boarding; }
};

class ConstraintViolation : public std::runtime_error {
 public:
  ConstraintViolation(const std::string& what, std::vector<std::string> points)
      : std::runtime_error(what), points_(std::move(points)) {}
  const std::vector<std::string>& points() const { return points_; }

 private:
  std::vector<std::string> points_;
};

namespace detail {

inline void require_same_lattice(const DesignGrid& d, const AggregateTables& a) {
  const auto& lat = a.lattice;
  if (static_cast<int>(d.hp.size()) != lat.nx || static_cast<int>(d.hd.size()) != lat.nx ||
      static_cast<int>(d.s.size()) != lat.nx || d.b.nx() != lat.nx || d.b.ny() != lat.ny)
    throw InvalidParameter("design lattice does not match demand lattice");
}

inline bool is_multiple(double h, double base) {
  const double k = std::round(h / base);
  return k >= 1 && std::abs(h - k * base) <= 1e-9 * base;
}

// Relative slack used when checking constraints that the solver meets with equality.
constexpr double kSlack = 1e-9;

}  // namespace detail

// Lists every lattice point that breaks the headway bounds, spacing bounds,
// capacity or coordination requirements.
inline std::vector<std::string> constraint_violations(const DesignGrid& d, const AggregateTables& a,
                                                      const ModelParams& p) {
  detail::require_same_lattice(d, a);
  std::vector<std::string> out;
  const double eps = detail::kSlack;
  const double hd_lo = p.min_distribution_headway();
  auto report = [&](int i, int j, const std::string& what) {
    std::ostringstream os;
    os << what << " at i=" << i;
    if (j >= 0) os << ", j=" << j;
    out.push_back(os.str());
  };
  for (int i = 0; i < d.nx(); ++i) {
    if (d.hp[i] < p.min_headway * (1 - eps) || d.hp[i] > p.max_headway * (1 + eps)) report(i, -1, "H_lp out of bounds");
    if (d.hd[i] < hd_lo * (1 - eps) || d.hd[i] > p.max_headway * (1 + eps)) report(i, -1, "H_ld out of bounds");
    if (!(d.s[i] > 0) || d.s[i] > p.region_length * (1 + eps)) report(i, -1, "S_l out of bounds");
    if (a.column_p[i] * d.s[i] * d.hp[i] > d.capacity * (1 + eps)) report(i, -1, "collection capacity exceeded");
    if (a.column_d[i] * d.s[i] * d.hd[i] > d.capacity * (1 + eps)) report(i, -1, "distribution capacity exceeded");
    if (coordinates_collection(d.mode) && !detail::is_multiple(d.hp[i], p.trunk_headway))
      report(i, -1, "H_lp not a multiple of H_t");
    if (coordinates_distribution(d.mode) && std::abs(d.hd[i] - p.trunk_headway) > eps * p.trunk_headway)
      report(i, -1, "H_ld differs from H_t");
    for (int j = 0; j < d.ny(); ++j)
      if (!(d.b(i, j) > 0) || d.b(i, j) > p.region_width * (1 + eps)) report(i, j, "B out of bounds");
  }
  return out;
}

inline double access_cost(const DesignGrid& d, const AggregateTables& a, const ModelParams& p) {
  detail::require_same_lattice(d, a);
  const auto& lat = a.lattice;
  double sum = 0;
  for (int i = 0; i < lat.nx; ++i)
    for (int j = 0; j < lat.ny; ++j)
      sum += (d.s[i] + d.b(i, j)) * (a.density_p(i, j) + a.density_d(i, j));
  return sum * lat.cell_area() / (4.0 * p.walk_speed);
}

struct WaitCost {
  double collection = 0;    // C_Wp
  double distribution = 0;  // C_Wd
};

inline WaitCost wait_transfer_cost(const DesignGrid& d, const AggregateTables& a, const ModelParams& p,
                                   Coordination mode) {
  detail::require_same_lattice(d, a);
  const double ht = p.trunk_headway;
  const bool cp = coordinates_collection(mode);
  const bool cd = coordinates_distribution(mode);
  for (int i = 0; i < d.nx(); ++i) {
    if (cp && !detail::is_multiple(d.hp[i], ht))
      throw ConstraintViolation("collection coordination requires H_lp = k H_t", {"i=" + std::to_string(i)});
    if (cd && std::abs(d.hd[i] - ht) > detail::kSlack * ht)
      throw ConstraintViolation("distribution coordination requires H_ld = H_t", {"i=" + std::to_string(i)});
  }
  WaitCost w;
  const double dx = a.lattice.dx();
  for (int i = 0; i < d.nx(); ++i) {
    const double lp = a.column_p[i], ld = a.column_d[i];
    const double alight = (cp ? 1.0 : 0.5) * p.alight_time * d.s[i] * d.hp[i] * lp;
    const double trunk_wait = cp ? 0.0 : ht / 2;
    w.collection += (d.hp[i] / 2 + alight + p.transfer_to_trunk + trunk_wait) * lp * dx;
    const double board = (cd ? 1.0 : 0.5) * p.board_time * d.s[i] * ht * ld;
    const double feeder_wait = cd ? 0.0 : d.hd[i] / 2;
    w.distribution += (p.transfer_to_feeder + feeder_wait + board) * ld * dx;
  }
  return w;
}

struct InVehicleCost {
  double distance = 0;  // C_T1
  double stops = 0;     // C_T2
  double boarding = 0;  // C_T3
  double total() const { return distance + stops + boarding; }
};

inline InVehicleCost invehicle_cost(const DesignGrid& d, const AggregateTables& a, const ModelParams& p) {
  detail::require_same_lattice(d, a);
  const auto& lat = a.lattice;
  InVehicleCost c;
  for (int i = 0; i < lat.nx; ++i) {
    for (int j = 0; j < lat.ny; ++j) {
      c.distance += (lat.x(i) + lat.y(j)) * (a.density_p(i, j) + a.density_d(i, j));
      c.stops += (a.tail_p(i, j) + a.tail_d(i, j)) / d.b(i, j);
    }
    c.boarding += p.board_time * d.s[i] * d.hp[i] * a.moment_p[i] + p.alight_time * d.s[i] * d.hd[i] * a.moment_d[i];
  }
  c.distance *= lat.cell_area() / p.bus_speed;
  c.stops *= p.dwell_per_stop * lat.cell_area();
  c.boarding *= lat.dx();
  return c;
}

struct AgencyCost {
  double stops = 0;          // C_s
  double vehicle_km = 0;     // C_vk
  double vehicle_hours = 0;  // C_vh
  double fleet_moving = 0;   // V_h1
  double fleet_stopping = 0; // V_h2
  double fleet_boarding = 0; // V_h3
  double total() const { return stops + vehicle_km + vehicle_hours; }
};

inline AgencyCost agency_cost(const DesignGrid& d, const AggregateTables& a, const ModelParams& p,
                              const AgencyRates& r) {
  detail::require_same_lattice(d, a);
  const auto& lat = a.lattice;
  const double W = p.region_width, theta = p.value_of_time;
  AgencyCost c;
  double stop_density = 0;  // integral of 1/(S B)
  double route_km = 0;      // integral of (W+x)/S (1/H_lp + 1/H_ld)
  double stop_calls = 0;    // integral of 1/(S B) (1/H_lp + 1/H_ld)
  for (int i = 0; i < lat.nx; ++i) {
    const double freq = 1.0 / d.hp[i] + 1.0 / d.hd[i];
    double inv_b = 0;
    for (int j = 0; j < lat.ny; ++j) inv_b += 1.0 / d.b(i, j);
    inv_b *= lat.dy();
    stop_density += inv_b / d.s[i];
    stop_calls += inv_b / d.s[i] * freq;
    route_km += (W + lat.x(i)) / d.s[i] * freq;
  }
  stop_density *= lat.dx();
  stop_calls *= lat.dx();
  route_km *= lat.dx();
  c.stops = p.stop_cost / theta * stop_density;
  c.vehicle_km = r.per_vehicle_km / theta * route_km;
  c.fleet_moving = route_km / p.bus_speed;
  c.fleet_stopping = p.dwell_per_stop * stop_calls;
  c.fleet_boarding = (p.alight_time + p.board_time) * a.total();
  c.vehicle_hours = r.per_vehicle_hour / theta * (c.fleet_moving + c.fleet_stopping + c.fleet_boarding);
  return c;
}

// Generalized cost regrouped into a constant, single integrals over x and
// double integrals over the region. Only defined for the uncoordinated model.
inline double rearranged_cost(const DesignGrid& d, const AggregateTables& a, const ModelParams& p,
                              const AgencyRates& r) {
  detail::require_same_lattice(d, a);
  const auto& lat = a.lattice;
  const double W = p.region_width, theta = p.value_of_time, vw = p.walk_speed, vi = p.bus_speed;
  const double pv = r.per_vehicle_km, pm = r.per_vehicle_hour;
  const double ta = p.alight_time, tb = p.board_time, t0 = p.dwell_per_stop, ht = p.trunk_headway;

  double constant = pm / theta * (ta + tb) * a.total();
  double single_x = 0;
  for (int i = 0; i < lat.nx; ++i) {
    const double lp = a.column_p[i], ld = a.column_d[i];
    single_x += lat.x(i) / vi * (lp + ld) + (p.transfer_to_trunk + ht / 2) * lp + p.transfer_to_feeder * ld;
  }
  double single_y = 0;
  for (int j = 0; j < lat.ny; ++j) single_y += lat.y(j) / vi * (a.row_p[j] + a.row_d[j]);
  constant += single_x * lat.dx() + single_y * lat.dy();

  double line_terms = 0;
  for (int i = 0; i < lat.nx; ++i) {
    const double x = lat.x(i), s = d.s[i], hp = d.hp[i], hd = d.hd[i];
    const double lp = a.column_p[i], ld = a.column_d[i];
    const double freq = 1.0 / hp + 1.0 / hd;
    line_terms += pv * (W + x) / (theta * s) * freq + pm * (W + x) / (theta * s * vi) * freq +
                  s / (4 * vw) * (lp + ld) + hp / 2 * lp + hd / 2 * ld + ta / 2 * s * hp * lp * lp +
                  tb / 2 * s * ht * ld * ld + tb * s * hp * a.moment_p[i] + ta * s * hd * a.moment_d[i];
  }
  line_terms *= lat.dx();

  double area_terms = 0;
  for (int i = 0; i < lat.nx; ++i) {
    const double s = d.s[i], freq = 1.0 / d.hp[i] + 1.0 / d.hd[i];
    for (int j = 0; j < lat.ny; ++j) {
      const double b = d.b(i, j);
      area_terms += p.stop_cost / theta / (s * b) + pm / theta * t0 / (s * b) * freq +
                    b / (4 * vw) * (a.density_p(i, j) + a.density_d(i, j)) +
                    t0 * (a.tail_p(i, j) + a.tail_d(i, j)) / b;
    }
  }
  area_terms *= lat.cell_area();
  return constant + line_terms + area_terms;
}

struct EvalOptions {
  bool check_constraints = true;
  bool verify_identity = true;  // compare against rearranged_cost when uncoordinated
};

class IdentityMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline CostBreakdown generalized_cost(const DesignGrid& d, const AggregateTables& a, const ModelParams& p,
                                      const AgencyRates& r, EvalOptions opt = {}) {
  if (opt.check_constraints) {
    auto bad = constraint_violations(d, a, p);
    if (!bad.empty()) throw ConstraintViolation("design violates constraints (" + bad.front() + ", ...)", bad);
  }
  CostBreakdown c;
  const auto ag = agency_cost(d, a, p, r);
  c.stops = ag.stops;
  c.vehicle_km = ag.vehicle_km;
  c.vehicle_hours = ag.vehicle_hours;
  c.fleet_moving = ag.fleet_moving;
  c.fleet_stopping = ag.fleet_stopping;
  c.fleet_boarding = ag.fleet_boarding;
  c.access = access_cost(d, a, p);
  const auto w = wait_transfer_cost(d, a, p, d.mode);
  c.wait_p = w.collection;
  c.wait_d = w.distribution;
  c.wait = w.collection + w.distribution;
  const auto t = invehicle_cost(d, a, p);
  c.ride_distance = t.distance;
  c.ride_stops = t.stops;
  c.ride_boarding = t.boarding;
  c.ride = t.total();
  c.agency = ag.total();
  c.user = c.access + c.wait + c.ride;
  c.generalized = c.agency + c.user;
  if (opt.verify_identity && d.mode == Coordination::none) {
    const double alt = rearranged_cost(d, a, p, r);
    if (std::abs(alt - c.generalized) > 1e-9 * std::max(1.0, std::abs(c.generalized)))
      throw IdentityMismatch("component sum and rearranged cost disagree");
  }
  return c;
}

}  // namespace feeder
