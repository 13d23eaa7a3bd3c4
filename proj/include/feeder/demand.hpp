#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "feeder/params.hpp"

namespace feeder {

class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Dense nx-by-ny array of doubles, indexed (i along x, j along y).
class Grid2 {
 public:
  Grid2() = default;
  Grid2(int nx, int ny, double fill = 0.0)
      : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, fill) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * ny_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * ny_ + j]; }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  bool operator==(const Grid2&) const = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> data_;
};

// Midpoint lattice over [0,L] x [0,W]: x_i = (i + 0.5) L / nx, y_j = (j + 0.5) W / ny.
struct Lattice {
  double length = 0;
  double width = 0;
  int nx = 0;
  int ny = 0;

  Lattice() = default;
  Lattice(double L, double W, int nx_, int ny_) : length(L), width(W), nx(nx_), ny(ny_) {
    if (!(L > 0) || !(W > 0) || nx < 1 || ny < 1)
      throw InvalidParameter("lattice: dimensions must be positive");
  }
  static Lattice of(const ModelParams& p) { return {p.region_length, p.region_width, p.nx, p.ny}; }

  double dx() const { return length / nx; }
  double dy() const { return width / ny; }
  double cell_area() const { return dx() * dy(); }
  double x(int i) const { return (i + 0.5) * dx(); }
  double y(int j) const { return (j + 0.5) * dy(); }

  bool operator==(const Lattice&) const = default;
};

// Density of a normal(mean, sigma) truncated to [a, b]. An empty sigma means
// the uniform limit (sigma -> infinity).
inline double trunc_normal_pdf(double x, double mean, std::optional<double> sigma, double a, double b) {
  if (!(a < b)) throw InvalidParameter("trunc_normal_pdf: requires a < b");
  if (sigma && !(*sigma > 0)) throw InvalidParameter("trunc_normal_pdf: sigma must be > 0");
  if (x < a || x > b) return 0.0;
  if (!sigma) return 1.0 / (b - a);
  const double s = *sigma;
  const double za = (a - mean) / s;
  const double zb = (b - mean) / s;
  // Phi(zb) - Phi(za), written to keep precision in both tails.
  double mass;
  if (za >= 0)
    mass = 0.5 * (std::erfc(za / std::sqrt(2.0)) - std::erfc(zb / std::sqrt(2.0)));
  else if (zb <= 0)
    mass = 0.5 * (std::erfc(-zb / std::sqrt(2.0)) - std::erfc(-za / std::sqrt(2.0)));
  else
    mass = 1.0 - 0.5 * std::erfc(zb / std::sqrt(2.0)) - 0.5 * std::erfc(-za / std::sqrt(2.0));
  const double z = (x - mean) / s;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z) / (s * mass);
}

// One axis of a separable truncated-normal density.
struct AxisProfile {
  double mean = 0.0;
  std::optional<double> sigma;  // empty: uniform

  static AxisProfile uniform() { return {}; }
  static AxisProfile normal(double mean, double sigma) { return {mean, sigma}; }
};

// total * TrN(x | x-profile, 0, L) * TrN(y | y-profile, 0, W)
struct TruncNormalDensity {
  double total = 0.0;  // patrons/h before the walking-zone exclusion
  AxisProfile x;
  AxisProfile y;
};

// Tabulated density, bilinear between samples and held constant past the
// outermost sample coordinates.
struct GridDensity {
  std::vector<double> xs;  // ascending
  std::vector<double> ys;  // ascending
  Grid2 values;            // values(i, j) at (xs[i], ys[j])

  double eval(double x, double y) const {
    auto bracket = [](const std::vector<double>& v, double t, int& k, double& w) {
      if (v.size() == 1 || t <= v.front()) { k = 0; w = 0; return; }
      if (t >= v.back()) { k = static_cast<int>(v.size()) - 2; w = 1; return; }
      auto it = std::upper_bound(v.begin(), v.end(), t);
      k = static_cast<int>(it - v.begin()) - 1;
      w = (t - v[k]) / (v[k + 1] - v[k]);
    };
    int i, j;
    double wx, wy;
    bracket(xs, x, i, wx);
    bracket(ys, y, j, wy);
    const int i1 = xs.size() == 1 ? i : i + 1;
    const int j1 = ys.size() == 1 ? j : j + 1;
    const double v = (1 - wx) * (1 - wy) * values(i, j) + wx * (1 - wy) * values(i1, j) +
                     (1 - wx) * wy * values(i, j1) + wx * wy * values(i1, j1);
    return std::max(0.0, v);
  }
};

using DirectionDensity = std::variant<TruncNormalDensity, GridDensity>;

enum class Direction { collection, distribution };

// Per-direction demand densities (patrons/km^2/h) over the quarter region,
// zero inside the walking zone x + y <= walk_radius.
class DemandField {
 public:
  DemandField(double L, double W, double walk_radius, DirectionDensity collection, DirectionDensity distribution)
      : length_(L), width_(W), walk_radius_(walk_radius),
        collection_(std::move(collection)), distribution_(std::move(distribution)) {
    if (!(L > 0) || !(W > 0)) throw InvalidParameter("demand: region dimensions must be positive");
    if (!(walk_radius >= 0)) throw InvalidParameter("demand: walk radius must be >= 0");
    check(collection_);
    check(distribution_);
  }

  // Terminal-centred or otherwise separable truncated normals in both directions.
  static DemandField trunc_normal(const ModelParams& p, TruncNormalDensity collection, TruncNormalDensity distribution) {
    return {p.region_length, p.region_width, p.walk_radius, collection, distribution};
  }

  double length() const { return length_; }
  double width() const { return width_; }
  double walk_radius() const { return walk_radius_; }
  const DirectionDensity& collection() const { return collection_; }
  const DirectionDensity& distribution() const { return distribution_; }

  bool in_walking_zone(double x, double y) const { return x + y <= walk_radius_; }

  double density(Direction dir, double x, double y) const {
    constexpr double slack = 1e-12;
    if (x < -slack || y < -slack || x > length_ + slack || y > width_ + slack)
      throw OutOfDomain("demand: point (" + std::to_string(x) + ", " + std::to_string(y) + ") outside region");
    if (in_walking_zone(x, y)) return 0.0;
    return raw(dir == Direction::collection ? collection_ : distribution_, x, y);
  }

  // Fraction of the cell [x0,x1] x [y0,y1] outside the walking zone, exact.
  double open_fraction(double x0, double x1, double y0, double y1) const {
    const double h = y1 - y0, r = walk_radius_;
    if (x1 + y1 <= r) return 0.0;
    if (x0 + y0 >= r) return 1.0;
    // Covered height at x is clamp(r - y0 - x, 0, h): h up to a, then linear to zero at b.
    const double a = r - y1, b = r - y0;
    double covered = h * std::max(0.0, std::min(x1, a) - x0);
    const double lo = std::max(x0, a), hi = std::min(x1, b);
    if (hi > lo) covered += (b - lo) * (b - lo) / 2 - (b - hi) * (b - hi) / 2;
    return std::clamp(1.0 - covered / ((x1 - x0) * h), 0.0, 1.0);
  }

  // Cell-average density: smooth part at the midpoint times the share of the
  // cell outside the walking zone.
  double cell_density(Direction dir, double x0, double x1, double y0, double y1) const {
    const double f = open_fraction(x0, x1, y0, y1);
    if (f == 0) return 0.0;
    return f * raw(dir == Direction::collection ? collection_ : distribution_, 0.5 * (x0 + x1), 0.5 * (y0 + y1));
  }

  // Same field with the x and y axes exchanged (region becomes W x L).
  DemandField transposed() const {
    return {width_, length_, walk_radius_, transpose(collection_), transpose(distribution_)};
  }

 private:
  double raw(const DirectionDensity& d, double x, double y) const {
    if (const auto* tn = std::get_if<TruncNormalDensity>(&d)) {
      if (tn->total == 0) return 0.0;
      x = std::clamp(x, 0.0, length_);
      y = std::clamp(y, 0.0, width_);
      return tn->total * trunc_normal_pdf(x, tn->x.mean, tn->x.sigma, 0, length_) *
             trunc_normal_pdf(y, tn->y.mean, tn->y.sigma, 0, width_);
    }
    return std::get<GridDensity>(d).eval(x, y);
  }

  static void check(const DirectionDensity& d) {
    if (const auto* tn = std::get_if<TruncNormalDensity>(&d)) {
      if (!(tn->total >= 0)) throw InvalidParameter("demand: total must be >= 0");
      for (const auto* a : {&tn->x, &tn->y})
        if (a->sigma && !(*a->sigma > 0)) throw InvalidParameter("demand: sigma must be > 0");
      return;
    }
    const auto& g = std::get<GridDensity>(d);
    if (g.xs.empty() || g.ys.empty()) throw InvalidParameter("demand grid: no samples");
    if (g.values.nx() != static_cast<int>(g.xs.size()) || g.values.ny() != static_cast<int>(g.ys.size()))
      throw InvalidParameter("demand grid: value table does not match coordinates");
    if (!std::is_sorted(g.xs.begin(), g.xs.end()) || !std::is_sorted(g.ys.begin(), g.ys.end()))
      throw InvalidParameter("demand grid: coordinates must ascend");
    for (double v : g.values.values())
      if (!(v >= 0)) throw InvalidParameter("demand grid: densities must be >= 0");
  }

  static DirectionDensity transpose(const DirectionDensity& d) {
    if (const auto* tn = std::get_if<TruncNormalDensity>(&d)) return TruncNormalDensity{tn->total, tn->y, tn->x};
    const auto& g = std::get<GridDensity>(d);
    GridDensity t{g.ys, g.xs, Grid2(g.values.ny(), g.values.nx())};
    for (int i = 0; i < g.values.nx(); ++i)
      for (int j = 0; j < g.values.ny(); ++j) t.values(j, i) = g.values(i, j);
    return t;
  }

  double length_;
  double width_;
  double walk_radius_;
  DirectionDensity collection_;
  DirectionDensity distribution_;
};

// Aggregate demand quantities sampled on the solver lattice. All integrals are
// midpoint sums, with the walking zone removed by its exact share of each
// cell; tails integrate from y to W with half of the own cell.
struct AggregateTables {
  Lattice lattice;
  Grid2 density_p;  // lambda_p cell averages at lattice points
  Grid2 density_d;
  std::vector<double> column_p;  // Lambda_px(x_i)
  std::vector<double> column_d;  // Lambda_dx(x_i)
  Grid2 tail_p;                  // Lambda_pxy(x_i, y_j)
  Grid2 tail_d;                  // Lambda_dxy(x_i, y_j)
  Grid2 edge_tail_p;             // Lambda_pxy at cell edges y = j*dy, j = 0..ny
  Grid2 edge_tail_d;
  std::vector<double> moment_p;  // M_px(x_i)
  std::vector<double> moment_d;  // M_dx(x_i)
  std::vector<double> row_p;     // Lambda_py(y_j) = integral over x
  std::vector<double> row_d;
  double total_p = 0;  // Lambda_p' (after the walking-zone exclusion)
  double total_d = 0;

  double total() const { return total_p + total_d; }
};

inline AggregateTables aggregates(const DemandField& field, const Lattice& lat) {
  if (std::abs(lat.length - field.length()) > 1e-12 || std::abs(lat.width - field.width()) > 1e-12)
    throw InvalidParameter("aggregates: lattice does not cover the demand region");
  AggregateTables a;
  a.lattice = lat;
  const int nx = lat.nx, ny = lat.ny;
  const double dx = lat.dx(), dy = lat.dy();
  a.density_p = Grid2(nx, ny);
  a.density_d = Grid2(nx, ny);
  a.tail_p = Grid2(nx, ny);
  a.tail_d = Grid2(nx, ny);
  a.edge_tail_p = Grid2(nx, ny + 1);
  a.edge_tail_d = Grid2(nx, ny + 1);
  a.column_p.assign(nx, 0);
  a.column_d.assign(nx, 0);
  a.moment_p.assign(nx, 0);
  a.moment_d.assign(nx, 0);
  a.row_p.assign(ny, 0);
  a.row_d.assign(ny, 0);

  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double x0 = i * dx, y0 = j * dy;
      a.density_p(i, j) = field.cell_density(Direction::collection, x0, x0 + dx, y0, y0 + dy);
      a.density_d(i, j) = field.cell_density(Direction::distribution, x0, x0 + dx, y0, y0 + dy);
    }
    auto fill = [&](const Grid2& dens, Grid2& tail, Grid2& edge, double& column, double& moment) {
      double above = 0;  // integral over cells j+1..ny-1
      edge(i, ny) = 0;
      for (int j = ny - 1; j >= 0; --j) {
        const double cell = dens(i, j) * dy;
        tail(i, j) = above + 0.5 * cell;
        above += cell;
        edge(i, j) = above;
      }
      column = above;
      double m = 0;
      for (int j = 0; j < ny; ++j) m += dens(i, j) * tail(i, j) * dy;
      moment = m;
    };
    fill(a.density_p, a.tail_p, a.edge_tail_p, a.column_p[i], a.moment_p[i]);
    fill(a.density_d, a.tail_d, a.edge_tail_d, a.column_d[i], a.moment_d[i]);
  }
  for (int j = 0; j < ny; ++j) {
    double sp = 0, sd = 0;
    for (int i = 0; i < nx; ++i) {
      sp += a.density_p(i, j) * dx;
      sd += a.density_d(i, j) * dx;
    }
    a.row_p[j] = sp;
    a.row_d[j] = sd;
  }
  for (int i = 0; i < nx; ++i) {
    a.total_p += a.column_p[i] * dx;
    a.total_d += a.column_d[i] * dx;
  }
  return a;
}

}  // namespace feeder
