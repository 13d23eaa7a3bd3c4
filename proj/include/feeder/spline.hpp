#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "feeder/demand.hpp"

namespace feeder {

// Natural cubic spline through (x_k, y_k) with ascending knots. Outside the
// knot range the end values are held.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline() = default;
  NaturalCubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n == 0 || n != y_.size()) throw InvalidParameter("spline: need matching, nonempty knot arrays");
    for (std::size_t k = 1; k < n; ++k)
      if (!(x_[k] > x_[k - 1])) throw InvalidParameter("spline: knots must strictly ascend");
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    std::vector<double> c(n, 0.0), r(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double h0 = x_[k] - x_[k - 1], h1 = x_[k + 1] - x_[k];
      const double diag = 2 * (h0 + h1);
      const double rhs = 6 * ((y_[k + 1] - y_[k]) / h1 - (y_[k] - y_[k - 1]) / h0);
      const double denom = diag - h0 * c[k - 1];
      c[k] = h1 / denom;
      r[k] = (rhs - h0 * r[k - 1]) / denom;
    }
    for (std::size_t k = n - 2; k >= 1; --k) {
      m_[k] = r[k] - c[k] * m_[k + 1];
      if (k == 1) break;
    }
  }

  double operator()(double t) const {
    const std::size_t n = x_.size();
    if (n == 1) return y_[0];
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const std::size_t k = segment(t);
    const double h = x_[k + 1] - x_[k];
    const double a = (x_[k + 1] - t) / h, b = (t - x_[k]) / h;
    return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * h * h / 6.0;
  }

  const std::vector<double>& knots() const { return x_; }

 private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return std::min<std::size_t>(static_cast<std::size_t>(it - x_.begin()) - 1, x_.size() - 2);
  }

  std::vector<double> x_, y_, m_;
};

// Piecewise-cubic interpolation of lattice data f(x_i, y_j): natural splines
// along x for each row, then along y through the row values at the query x.
class GriddedCubic {
 public:
  GriddedCubic(std::vector<double> xs, std::vector<double> ys, const Grid2& values)
      : xs_(std::move(xs)), ys_(std::move(ys)), values_(values) {
    if (values_.nx() != static_cast<int>(xs_.size()) || values_.ny() != static_cast<int>(ys_.size()))
      throw InvalidParameter("gridded interpolation: value table does not match coordinates");
    for (int j = 0; j < values_.ny(); ++j) {
      std::vector<double> row(values_.nx());
      for (int i = 0; i < values_.nx(); ++i) row[i] = values_(i, j);
      rows_.emplace_back(xs_, row);
    }
  }

  // The 1-D profile y -> f(x, y) as a spline through the y lattice.
  NaturalCubicSpline along_y(double x) const {
    std::vector<double> col(ys_.size());
    for (std::size_t j = 0; j < ys_.size(); ++j) col[j] = rows_[j](x);
    return {ys_, col};
  }

  // Bilinear profile through the same lattice, held constant past the edges.
  std::vector<double> bilinear_column(double x) const {
    std::vector<double> col(ys_.size());
    int i = 0;
    double w = 0;
    if (xs_.size() > 1) {
      if (x <= xs_.front()) {
        i = 0;
      } else if (x >= xs_.back()) {
        i = static_cast<int>(xs_.size()) - 2;
        w = 1;
      } else {
        i = static_cast<int>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
        w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
      }
    }
    const int i1 = xs_.size() > 1 ? i + 1 : i;
    for (std::size_t j = 0; j < ys_.size(); ++j) col[j] = (1 - w) * values_(i, j) + w * values_(i1, j);
    return col;
  }

  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_, ys_;
  Grid2 values_;
  std::vector<NaturalCubicSpline> rows_;
};

}  // namespace feeder
