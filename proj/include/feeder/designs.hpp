#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "feeder/costmodel.hpp"
#include "feeder/solver.hpp"

namespace feeder {

// How much spatial freedom a design has. Each class after the first pins one
// more group of decision functions to a single value.
enum class DesignClass {
  heterogeneous,      // H_lp(x), H_ld(x), S_l(x), B(x,y)
  uniform_stop,       // B constant
  uniform_line_stop,  // S_l and B constant
  fully_uniform,      // every decision variable constant
};

inline const char* to_string(DesignClass c) {
  switch (c) {
    case DesignClass::heterogeneous: return "heterogeneous";
    case DesignClass::uniform_stop: return "uniform-stop-spacing";
    case DesignClass::uniform_line_stop: return "uniform-line-and-stop";
    case DesignClass::fully_uniform: return "fully-uniform";
  }
  return "heterogeneous";
}

inline DesignClass design_class_from_string(const std::string& s) {
  for (auto c : {DesignClass::heterogeneous, DesignClass::uniform_stop, DesignClass::uniform_line_stop,
                 DesignClass::fully_uniform})
    if (s == to_string(c)) return c;
  throw InvalidParameter("unknown design class '" + s + "'");
}

// Golden-section minimisation of a unimodal function on [lo, hi].
template <class F>
double golden_min(F&& f, double lo, double hi, double tol = 1e-9) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  // The end points are admissible too; golden search never evaluates them.
  double best = x, fb = f(x);
  for (double e : {lo, hi}) {
    const double fe = f(e);
    if (fe < fb) { best = e; fb = fe; }
  }
  return best;
}

namespace detail {

inline double fast_gc(const DesignGrid& d, const AggregateTables& a, const ModelParams& p, const AgencyRates& r) {
  return generalized_cost(d, a, p, r, {false, false}).generalized;
}

inline double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

// Smallest admissible collection headway under the coordination mode.
inline double collection_floor(const ModelParams& p, Coordination mode) {
  if (!coordinates_collection(mode)) return p.min_headway;
  return std::max(1.0, std::ceil(p.min_headway / p.trunk_headway - 1e-9)) * p.trunk_headway;
}

inline double distribution_floor(const ModelParams& p, Coordination mode) {
  return coordinates_distribution(mode) ? p.trunk_headway : p.min_distribution_headway();
}

// Largest line spacing for which some admissible headway meets capacity everywhere.
inline double spacing_ceiling(const AggregateTables& a, const ModelParams& p, int capacity, Coordination mode) {
  double s = p.region_length;
  const double mp = max_of(a.column_p), md = max_of(a.column_d);
  if (mp > 0) s = std::min(s, capacity / (mp * collection_floor(p, mode)));
  if (md > 0) s = std::min(s, capacity / (md * distribution_floor(p, mode)));
  return s;
}

// Best single stop spacing for the other variables held fixed.
inline void fit_uniform_stop(DesignGrid& d, const AggregateTables& a, const ModelParams& p, const AgencyRates& r) {
  auto f = [&](double b) {
    std::fill(d.b.values().begin(), d.b.values().end(), b);
    return fast_gc(d, a, p, r);
  };
  const double b = golden_min(f, 1e-3 * p.region_width, p.region_width);
  std::fill(d.b.values().begin(), d.b.values().end(), b);
}

// Column-wise headway optimum for a fixed line spacing vector.
inline void fit_headways(DesignGrid& d, const LocalRates& rates, const AggregateTables& a, const ModelParams& p) {
  for (int i = 0; i < d.nx(); ++i) {
    const auto h = update_headways(i, d.s[i], rates, a, p, d.capacity, d.mode);
    d.hp[i] = h.hp;
    d.hd[i] = h.hd;
  }
}

// Best single headway per direction for a uniform line spacing. The
// headway-dependent part of the cost is sum_i (alpha_i / (s H) + slope_i H).
inline void fit_uniform_headways(DesignGrid& d, const LocalRates& rates, const AggregateTables& a,
                                 const ModelParams& p) {
  const double s = d.s.front();
  HeadwaySlice cp, cd;
  for (int i = 0; i < d.nx(); ++i) {
    const auto ci = collection_slice(i, s, rates, a);
    const auto di = distribution_slice(i, s, rates, a, d.mode);
    cp.inverse += ci.inverse;
    cp.slope += ci.slope;
    cd.inverse += di.inverse;
    cd.slope += di.slope;
  }
  const double cap_p = detail::capacity_headway(d.capacity, max_of(a.column_p), s);
  const double cap_d = detail::capacity_headway(d.capacity, max_of(a.column_d), s);
  double hp;
  if (!coordinates_collection(d.mode)) {
    hp = detail::mid(p.min_headway, std::min(cap_p, p.max_headway), cp.interior());
  } else {
    const double ht = p.trunk_headway;
    const int k_lo = static_cast<int>(std::round(collection_floor(p, d.mode) / ht));
    const int k_hi = std::max(k_lo, static_cast<int>(std::floor(std::min(cap_p, p.max_headway) / ht + 1e-9)));
    const int k0 = std::clamp(static_cast<int>(std::min(std::floor(cp.interior() / ht), double(k_hi))), k_lo, k_hi);
    const int k1 = std::clamp(k0 + 1, k_lo, k_hi);
    hp = (cp(k1 * ht) < cp(k0 * ht) ? k1 : k0) * ht;
  }
  const double hd = coordinates_distribution(d.mode)
                        ? p.trunk_headway
                        : detail::mid(p.min_distribution_headway(), std::min(cap_d, p.max_headway), cd.interior());
  std::fill(d.hp.begin(), d.hp.end(), hp);
  std::fill(d.hd.begin(), d.hd.end(), hd);
}

inline double total_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace detail

// Heterogeneous headways and line spacings with one stop spacing for the
// whole region: alternate a 1-D search on B with the inner fixed point.
inline SolveReport solve_uniform_stop(const ModelParams& p, const AggregateTables& a, const AgencyRates& r,
                                      int capacity, Coordination mode, const SolveOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto& lat = a.lattice;
  const int nx = lat.nx;
  const double eps = p.tolerance;
  DesignGrid d = opt.initial ? *opt.initial : default_initial_design(p, lat, capacity, mode);
  d.capacity = capacity;
  d.mode = mode;
  SolveReport rep;
  for (int k = 1; k <= opt.max_outer; ++k) {
    const DesignGrid prev = d;
    detail::fit_uniform_stop(d, a, p, r);
    const auto rates = local_rates(d.b, a, p, r, mode);
    int inner = 0;
    for (int kk = 1; kk <= opt.max_inner; ++kk) {
      inner = kk;
      const auto s_in = d.s, hp_in = d.hp, hd_in = d.hd;
      for (int i = 0; i < nx; ++i) {
        const auto h = update_headways(i, s_in[i], rates, a, p, capacity, mode);
        d.hp[i] = h.hp;
        d.hd[i] = h.hd;
        d.s[i] = update_line_spacing(i, d.hp[i], d.hd[i], rates, a, p, capacity, mode);
      }
      if (detail::total_abs_diff(d.s, s_in) <= nx * eps &&
          detail::total_abs_diff(d.hp, hp_in) + detail::total_abs_diff(d.hd, hd_in) <= 2 * nx * eps)
        break;
    }
    Residual res{k, inner, detail::total_abs_diff(d.s, prev.s),
                 detail::total_abs_diff(d.hp, prev.hp) + detail::total_abs_diff(d.hd, prev.hd),
                 detail::total_abs_diff(d.b.values(), prev.b.values())};
    rep.history.push_back(res);
    rep.inner_iterations += inner;
    rep.outer_iterations = k;
    if (res.s <= nx * eps && res.h <= 2 * nx * eps && res.b <= nx * lat.ny * eps) {
      rep.converged = true;
      break;
    }
  }
  rep.design = std::move(d);
  rep.cost = generalized_cost(rep.design, a, p, r);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// Constant line and stop spacing; headways either heterogeneous (fit per
// column) or uniform. Coordinate descent over the scalars, each by 1-D search
// with the headways re-fitted inside the line-spacing search.
inline SolveReport solve_uniform_spacing(const ModelParams& p, const AggregateTables& a, const AgencyRates& r,
                                         int capacity, Coordination mode, bool uniform_headway,
                                         const SolveOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto& lat = a.lattice;
  const int nx = lat.nx;
  const double eps = p.tolerance;
  DesignGrid d = opt.initial ? *opt.initial : default_initial_design(p, lat, capacity, mode);
  d.capacity = capacity;
  d.mode = mode;
  const double s_hi = detail::spacing_ceiling(a, p, capacity, mode);
  const double s_lo = std::min(1e-3 * p.region_length, s_hi);
  std::fill(d.s.begin(), d.s.end(), std::clamp(d.s.front(), s_lo, s_hi));
  std::fill(d.b.values().begin(), d.b.values().end(), d.b(0, 0));

  auto fit_h = [&](const LocalRates& rates) {
    if (uniform_headway)
      detail::fit_uniform_headways(d, rates, a, p);
    else
      detail::fit_headways(d, rates, a, p);
  };

  SolveReport rep;
  for (int k = 1; k <= opt.max_outer; ++k) {
    const DesignGrid prev = d;
    detail::fit_uniform_stop(d, a, p, r);
    const auto rates = local_rates(d.b, a, p, r, mode);
    auto profile = [&](double s) {
      std::fill(d.s.begin(), d.s.end(), s);
      fit_h(rates);
      return detail::fast_gc(d, a, p, r);
    };
    const double s = golden_min(profile, s_lo, s_hi);
    std::fill(d.s.begin(), d.s.end(), s);
    fit_h(rates);
    Residual res{k, 1, detail::total_abs_diff(d.s, prev.s),
                 detail::total_abs_diff(d.hp, prev.hp) + detail::total_abs_diff(d.hd, prev.hd),
                 detail::total_abs_diff(d.b.values(), prev.b.values())};
    rep.history.push_back(res);
    rep.inner_iterations += 1;
    rep.outer_iterations = k;
    if (res.s <= nx * eps && res.h <= 2 * nx * eps && res.b <= nx * lat.ny * eps) {
      rep.converged = true;
      break;
    }
  }
  rep.design = std::move(d);
  rep.cost = generalized_cost(rep.design, a, p, r);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline SolveReport solve_class(DesignClass c, const ModelParams& p, const AggregateTables& a, const AgencyRates& r,
                               int capacity, Coordination mode, const SolveOptions& opt = {}) {
  switch (c) {
    case DesignClass::heterogeneous: return solve_design(p, a, r, capacity, mode, opt);
    case DesignClass::uniform_stop: return solve_uniform_stop(p, a, r, capacity, mode, opt);
    case DesignClass::uniform_line_stop: return solve_uniform_spacing(p, a, r, capacity, mode, false, opt);
    case DesignClass::fully_uniform: return solve_uniform_spacing(p, a, r, capacity, mode, true, opt);
  }
  throw InvalidParameter("unknown design class");
}

inline VehicleSizeResult optimize_class(DesignClass c, const ModelParams& p, const AggregateTables& a,
                                        Coordination mode, int workers = 1, const SolveOptions& opt = {}) {
  return search_capacity(
      p.min_capacity, p.max_capacity,
      [&](int K) { return solve_class(c, p, a, agency_rates(K, p.value_of_time), K, mode, opt); }, workers);
}

}  // namespace feeder
