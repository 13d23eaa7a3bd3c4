#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "feeder/costmodel.hpp"
#include "feeder/demand.hpp"
#include "feeder/parallel.hpp"
#include "feeder/params.hpp"

namespace feeder {

// Per-column coefficients of the first-order conditions.
struct LocalRates {
  std::vector<double> alpha;   // agency cost rate per bus on the line at x, h
  std::vector<double> beta_p;  // collection boarding/alighting coefficient
  std::vector<double> beta_d;  // distribution alighting coefficient
  std::vector<double> gamma;   // stop infrastructure rate
};

// beta_p carries the terminal alighting term, which doubles when the
// collection direction is coordinated with the trunk line.
inline LocalRates local_rates(const Grid2& stop_spacing, const AggregateTables& a, const ModelParams& p,
                              const AgencyRates& r, Coordination mode = Coordination::none) {
  const auto& lat = a.lattice;
  if (stop_spacing.nx() != lat.nx || stop_spacing.ny() != lat.ny)
    throw InvalidParameter("local_rates: stop spacing lattice mismatch");
  const double theta = p.value_of_time, W = p.region_width;
  const double alight_factor = coordinates_collection(mode) ? 2.0 : 1.0;
  LocalRates out;
  out.alpha.resize(lat.nx);
  out.beta_p.resize(lat.nx);
  out.beta_d.resize(lat.nx);
  out.gamma.resize(lat.nx);
  for (int i = 0; i < lat.nx; ++i) {
    double inv_b = 0;
    for (int j = 0; j < lat.ny; ++j) {
      const double b = stop_spacing(i, j);
      if (!(b > 0)) throw InvalidParameter("local_rates: stop spacing must be positive");
      inv_b += 1.0 / b;
    }
    inv_b *= lat.dy();
    const double x = lat.x(i);
    out.alpha[i] = (r.per_vehicle_km * (W + x) + r.per_vehicle_hour * (W + x) / p.bus_speed +
                    r.per_vehicle_hour * p.dwell_per_stop * inv_b) / theta;
    const double lp = a.column_p[i];
    out.beta_p[i] = alight_factor * p.alight_time * lp * lp + 2 * p.board_time * a.moment_p[i];
    out.beta_d[i] = 2 * p.alight_time * a.moment_d[i];
    out.gamma[i] = p.stop_cost * inv_b / theta;
  }
  return out;
}

namespace detail {

inline double mid(double lo, double hi, double v) { return std::max(lo, std::min(hi, v)); }

inline double capacity_headway(int capacity, double column, double s) {
  return column > 0 ? capacity / (column * s) : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Terms of the generalized cost that depend on one column's headways, for
// fixed line spacing s: g(H) = alpha / (s H) + slope * H.
struct HeadwaySlice {
  double inverse = 0;  // alpha / s
  double slope = 0;
  double operator()(double h) const { return inverse / h + slope * h; }
  double interior() const {
    return slope > 0 ? std::sqrt(inverse / slope) : std::numeric_limits<double>::infinity();
  }
};

inline HeadwaySlice collection_slice(int i, double s, const LocalRates& r, const AggregateTables& a) {
  return {r.alpha[i] / s, 0.5 * (a.column_p[i] + r.beta_p[i] * s)};
}

inline HeadwaySlice distribution_slice(int i, double s, const LocalRates& r, const AggregateTables& a,
                                       Coordination mode) {
  const double wait = coordinates_distribution(mode) ? 0.0 : a.column_d[i];
  return {r.alpha[i] / s, 0.5 * (wait + r.beta_d[i] * s)};
}

struct HeadwayUpdate {
  double hp = 0;
  double hd = 0;
  // False when H_ld = H_t forces the distribution load above capacity; the
  // line spacing update then has to shrink S.
  bool distribution_feasible = true;
};

// Coordinate optimum of both headways at column i. Bounds take priority over
// the capacity cap; an infeasible cap is resolved by the line-spacing update.
inline HeadwayUpdate update_headways(int i, double s, const LocalRates& r, const AggregateTables& a,
                                     const ModelParams& p, int capacity, Coordination mode) {
  if (!(s > 0)) throw InvalidParameter("update_headways: line spacing must be positive");
  HeadwayUpdate u;
  const double hmax = p.max_headway, ht = p.trunk_headway;

  const auto cs = collection_slice(i, s, r, a);
  const double cap_p = detail::capacity_headway(capacity, a.column_p[i], s);
  if (!coordinates_collection(mode)) {
    u.hp = detail::mid(p.min_headway, std::min(cap_p, hmax), cs.interior());
  } else {
    // H_lp = k H_t; pick the better neighbouring multiple of the interior optimum.
    const double tiny = 1e-9;
    const int k_lo = std::max(1, static_cast<int>(std::ceil(p.min_headway / ht - tiny)));
    const double upper = std::min(cap_p, hmax);
    int k_hi = static_cast<int>(std::floor(upper / ht + tiny));
    k_hi = std::max(k_hi, k_lo);
    const double kstar = cs.interior() / ht;
    const int k0 = std::clamp(static_cast<int>(std::min(std::floor(kstar), double(k_hi))), k_lo, k_hi);
    const int k1 = std::clamp(k0 + 1, k_lo, k_hi);
    u.hp = (cs(k1 * ht) < cs(k0 * ht) ? k1 : k0) * ht;
  }

  const double cap_d = detail::capacity_headway(capacity, a.column_d[i], s);
  if (!coordinates_distribution(mode)) {
    const auto ds = distribution_slice(i, s, r, a, mode);
    u.hd = detail::mid(p.min_distribution_headway(), std::min(cap_d, hmax), ds.interior());
  } else {
    u.hd = ht;
    u.distribution_feasible = a.column_d[i] * s * ht <= capacity * (1 + 1e-12);
  }
  return u;
}

inline double spacing_denominator(int i, double hp, double hd, const LocalRates& r, const AggregateTables& a,
                                  const ModelParams& p, Coordination mode) {
  const double lp = a.column_p[i], ld = a.column_d[i];
  const double board_factor = coordinates_distribution(mode) ? 2.0 : 1.0;
  return (lp + ld) / (2 * p.walk_speed) + board_factor * p.board_time * ld * ld * p.trunk_headway +
         r.beta_p[i] * hp + r.beta_d[i] * hd;
}

// Coordinate optimum of the line spacing at column i, capped by capacity and L.
inline double update_line_spacing(int i, double hp, double hd, const LocalRates& r, const AggregateTables& a,
                                  const ModelParams& p, int capacity, Coordination mode = Coordination::none) {
  const double num = 2 * r.alpha[i] * (1 / hp + 1 / hd) + 2 * r.gamma[i];
  const double den = spacing_denominator(i, hp, hd, r, a, p, mode);
  double s = den > 0 ? std::sqrt(num / den) : std::numeric_limits<double>::infinity();
  if (a.column_p[i] > 0) s = std::min(s, capacity / (a.column_p[i] * hp));
  if (a.column_d[i] > 0) s = std::min(s, capacity / (a.column_d[i] * hd));
  return std::min(s, p.region_length);
}

// Coordinate optimum of the stop spacing at lattice point (i, j), clamped to W.
inline double update_stop_spacing(int i, int j, double s, double hp, double hd, const AggregateTables& a,
                                  const ModelParams& p, const AgencyRates& r) {
  if (!(s > 0) || !(hp > 0) || !(hd > 0)) throw InvalidParameter("update_stop_spacing: inputs must be positive");
  const double t0 = p.dwell_per_stop, pm = r.per_vehicle_hour;
  const double agency = (p.stop_cost + pm * t0 / hp + pm * t0 / hd) / (p.value_of_time * s);
  const double num = 4 * p.walk_speed * (agency + t0 * (a.tail_p(i, j) + a.tail_d(i, j)));
  const double den = a.density_p(i, j) + a.density_d(i, j);
  const double W = p.region_width;
  if (!(den > 0)) return W;
  const double b = std::sqrt(num / den);
  return std::clamp(b, 1e-9 * W, W);
}

struct Residual {
  int outer = 0;
  int inner = 0;      // inner iterations used
  double s = 0;       // sum |dS| against the previous outer iterate
  double h = 0;       // sum |dH_lp| + |dH_ld|
  double b = 0;       // sum |dB|
};

struct SolveOptions {
  int max_outer = 200;
  int max_inner = 500;
  std::optional<DesignGrid> initial;
};

struct SolveReport {
  DesignGrid design;
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;  // total over all outer iterations
  std::vector<Residual> history;
  CostBreakdown cost;
  double seconds = 0;
};

// Boundary-feasible starting design: 15 min headways, 0.5 km line spacing,
// 0.4 km stop spacing, adjusted to the coordination mode.
inline DesignGrid default_initial_design(const ModelParams& p, const Lattice& lat, int capacity, Coordination mode) {
  const double quarter_hour = 0.25;
  double hp = detail::mid(p.min_headway, p.max_headway, quarter_hour);
  double hd = detail::mid(p.min_distribution_headway(), p.max_headway, quarter_hour);
  if (coordinates_collection(mode)) hp = std::max(1.0, std::round(hp / p.trunk_headway)) * p.trunk_headway;
  if (coordinates_distribution(mode)) hd = p.trunk_headway;
  return DesignGrid::uniform(lat, hp, hd, std::min(0.5, p.region_length), std::min(0.4, p.region_width), capacity,
                             mode);
}

// Bound-feasible random starting design for multi-start runs. Same seed, same design.
inline DesignGrid random_initial_design(const ModelParams& p, const Lattice& lat, int capacity, Coordination mode,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  DesignGrid d = default_initial_design(p, lat, capacity, mode);
  const double ht = p.trunk_headway;
  for (int i = 0; i < lat.nx; ++i) {
    d.hp[i] = draw(p.min_headway, p.max_headway);
    d.hd[i] = draw(p.min_distribution_headway(), p.max_headway);
    if (coordinates_collection(mode))
      d.hp[i] = std::clamp(std::round(d.hp[i] / ht), 1.0, std::max(1.0, std::floor(p.max_headway / ht))) * ht;
    if (coordinates_distribution(mode)) d.hd[i] = ht;
    d.s[i] = draw(0.05 * p.region_length, p.region_length);
    for (int j = 0; j < lat.ny; ++j) d.b(i, j) = draw(0.05 * p.region_width, p.region_width);
  }
  return d;
}

// Two-stage fixed-point iteration: stop spacings from the current headways and
// line spacings, then an inner loop alternating headways and line spacings.
inline SolveReport solve_design(const ModelParams& p, const AggregateTables& a, const AgencyRates& r, int capacity,
                                Coordination mode, const SolveOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  require_valid(p);
  if (capacity < 1) throw InvalidParameter("solve_design: capacity must be >= 1");
  const auto& lat = a.lattice;
  const int nx = lat.nx, ny = lat.ny;
  const double eps = p.tolerance;

  DesignGrid d = opt.initial ? *opt.initial : default_initial_design(p, lat, capacity, mode);
  if (d.nx() != nx || d.ny() != ny) throw InvalidParameter("solve_design: initial design lattice mismatch");
  d.capacity = capacity;
  d.mode = mode;

  SolveReport rep;
  Grid2 b_next(nx, ny);
  std::vector<double> s_in(nx), hp_in(nx), hd_in(nx);
  for (int k = 1; k <= opt.max_outer; ++k) {
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) b_next(i, j) = update_stop_spacing(i, j, d.s[i], d.hp[i], d.hd[i], a, p, r);
    const auto rates = local_rates(b_next, a, p, r, mode);

    std::vector<double> s = d.s, hp = d.hp, hd = d.hd;
    int inner = 0;
    for (int kk = 1; kk <= opt.max_inner; ++kk) {
      inner = kk;
      s_in = s;
      hp_in = hp;
      hd_in = hd;
      for (int i = 0; i < nx; ++i) {
        const auto h = update_headways(i, s_in[i], rates, a, p, capacity, mode);
        hp[i] = h.hp;
        hd[i] = h.hd;
        s[i] = update_line_spacing(i, hp[i], hd[i], rates, a, p, capacity, mode);
      }
      double ds = 0, dh = 0;
      for (int i = 0; i < nx; ++i) {
        ds += std::abs(s[i] - s_in[i]);
        dh += std::abs(hp[i] - hp_in[i]) + std::abs(hd[i] - hd_in[i]);
      }
      if (ds <= nx * eps && dh <= 2 * nx * eps) break;
    }

    Residual res{k, inner, 0, 0, 0};
    for (int i = 0; i < nx; ++i) {
      res.s += std::abs(s[i] - d.s[i]);
      res.h += std::abs(hp[i] - d.hp[i]) + std::abs(hd[i] - d.hd[i]);
      for (int j = 0; j < ny; ++j) res.b += std::abs(b_next(i, j) - d.b(i, j));
    }
    rep.history.push_back(res);
    rep.inner_iterations += inner;
    rep.outer_iterations = k;
    d.s = std::move(s);
    d.hp = std::move(hp);
    d.hd = std::move(hd);
    d.b = b_next;
    if (res.s <= nx * eps && res.h <= 2 * nx * eps && res.b <= nx * ny * eps) {
      rep.converged = true;
      break;
    }
  }
  rep.design = std::move(d);
  rep.cost = generalized_cost(rep.design, a, p, r);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

class SolveFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CapacityPoint {
  int capacity = 0;
  double generalized = 0;
  bool converged = false;
};

struct VehicleSizeResult {
  int capacity = 0;
  SolveReport report;
  std::vector<CapacityPoint> curve;
};

// Exhaustive search over integer capacities; ties go to the smaller vehicle.
template <class SolveFn>
VehicleSizeResult search_capacity(int k_min, int k_max, SolveFn&& solve_for, int workers = 1) {
  if (k_min > k_max) throw InvalidParameter("capacity range is empty");
  const std::size_t count = static_cast<std::size_t>(k_max - k_min + 1);
  std::function<std::optional<SolveReport>(std::size_t)> fn = [&](std::size_t idx) -> std::optional<SolveReport> {
    try {
      return solve_for(k_min + static_cast<int>(idx));
    } catch (const ConstraintViolation&) {
      return std::nullopt;
    }
  };
  auto reports = parallel_map(count, fn, workers);
  VehicleSizeResult out;
  int best = -1;
  for (std::size_t idx = 0; idx < count; ++idx) {
    const int K = k_min + static_cast<int>(idx);
    const auto& rep = reports[idx];
    if (!rep) {
      out.curve.push_back({K, std::numeric_limits<double>::quiet_NaN(), false});
      continue;
    }
    out.curve.push_back({K, rep->cost.generalized, rep->converged});
    if (!rep->converged) continue;
    if (best < 0 || rep->cost.generalized < reports[best]->cost.generalized) best = static_cast<int>(idx);
  }
  if (best < 0) throw SolveFailure("no capacity in range produced a converged feasible design");
  out.capacity = k_min + best;
  out.report = std::move(*reports[best]);
  return out;
}

inline VehicleSizeResult optimize_vehicle_size(const ModelParams& p, const AggregateTables& a, Coordination mode,
                                               int workers = 1, const SolveOptions& opt = {}) {
  return search_capacity(
      p.min_capacity, p.max_capacity,
      [&](int K) { return solve_design(p, a, agency_rates(K, p.value_of_time), K, mode, opt); }, workers);
}

}  // namespace feeder
