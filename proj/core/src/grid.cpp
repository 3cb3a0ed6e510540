#include "ecal/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecal/error.hpp"
#include "ecal/interp.hpp"

namespace ecal {
namespace {

bool detect_uniform(const std::vector<double>& p) {
  const double mean = (p.back() - p.front()) / static_cast<double>(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (std::abs((p[i + 1] - p[i]) - mean) > 1e-9 * mean) {
      return false;
    }
  }
  return true;
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!a.matches(b)) {
    throw DataError(std::string(where) + ": functions live on different grids");
  }
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DataError(std::string(what) + ": non-finite value");
    }
  }
}

std::vector<double> high_order_difference(std::span<const double> x, std::span<const double> y,
                                          bool uniform) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  if (uniform) {
    const double h = (x[n - 1] - x[0]) / static_cast<double>(n - 1);
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (i >= 2 && i + 2 < n) {
        d[i] = (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]) / (12.0 * h);
      } else {
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
      }
    }
    return d;
  }
  {
    const double h0 = x[1] - x[0];
    const double h1 = x[2] - x[1];
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1] -
           h0 / (h1 * (h0 + h1)) * y[2];
  }
  {
    const double ha = x[n - 1] - x[n - 2];
    const double hb = x[n - 2] - x[n - 3];
    d[n - 1] = (2.0 * ha + hb) / (ha * (ha + hb)) * y[n - 1] - (ha + hb) / (ha * hb) * y[n - 2] +
               ha / (hb * (ha + hb)) * y[n - 3];
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = x[i] - x[i - 1];
    const double hr = x[i + 1] - x[i];
    d[i] = -hr / (hl * (hl + hr)) * y[i - 1] + (hr - hl) / (hl * hr) * y[i] +
           hl / (hr * (hl + hr)) * y[i + 1];
  }
  return d;
}

std::vector<double> central_difference(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<double> d(n);
  d[0] = (y[1] - y[0]) / (x[1] - x[0]);
  d[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
  }
  return d;
}

}  // namespace

Grid::Grid(std::vector<double> points) {
  if (points.size() < 3) {
    throw DataError("Grid: need at least 3 points, got " + std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) {
      throw DataError("Grid: non-finite point");
    }
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw DataError("Grid: points must be strictly increasing (index " + std::to_string(i) +
                      ")");
    }
  }
  uniform_ = detect_uniform(points);
  points_ = std::make_shared<const std::vector<double>>(std::move(points));
}

Grid Grid::uniform(double lo, double hi, std::size_t n) {
  if (n < 3 || !(hi > lo)) {
    throw ConfigError("Grid::uniform: need n >= 3 and hi > lo");
  }
  std::vector<double> p(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = lo + h * static_cast<double>(i);
  }
  p.back() = hi;
  return Grid(std::move(p));
}

Grid Grid::normalized() const {
  if (is_unit()) {
    return *this;
  }
  return rescaled(0.0, 1.0);
}

Grid Grid::rescaled(double lo, double hi) const {
  const double a = front();
  const double span = back() - a;
  std::vector<double> p(size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = lo + (hi - lo) * (((*points_)[i] - a) / span);
  }
  p.front() = lo;
  p.back() = hi;
  return Grid(std::move(p));
}

bool Grid::matches(const Grid& other, double rel_tol) const {
  if (points_ == other.points_) {
    return true;
  }
  if (size() != other.size()) {
    return false;
  }
  const double tol = rel_tol * (back() - front());
  for (std::size_t i = 0; i < size(); ++i) {
    if (std::abs((*points_)[i] - other[i]) > tol) {
      return false;
    }
  }
  return true;
}

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw DataError("GridFunction: " + std::to_string(values_.size()) + " values for a grid of " +
                    std::to_string(grid_.size()) + " points");
  }
  require_finite(values_, "GridFunction");
}

Srvf::Srvf(Grid unit_grid, std::vector<double> values, double anchor)
    : Srvf(unit_grid, std::move(values), anchor, unit_grid) {}

Srvf::Srvf(Grid unit_grid, std::vector<double> values, double anchor, Grid source_grid)
    : grid_(std::move(unit_grid)),
      source_grid_(std::move(source_grid)),
      values_(std::move(values)),
      anchor_(anchor) {
  if (!grid_.is_unit()) {
    throw DataError("Srvf: grid must span [0,1]");
  }
  if (values_.size() != grid_.size() || source_grid_.size() != grid_.size()) {
    throw DataError("Srvf: length mismatch");
  }
  require_finite(values_, "Srvf");
  if (!std::isfinite(anchor_)) {
    throw DataError("Srvf: non-finite anchor");
  }
}

GridFunction resample(const GridFunction& f, const Grid& g) {
  const Grid& src = f.grid();
  if (g.front() < src.front() || g.back() > src.back()) {
    throw DataError("resample: target grid extends outside the source window");
  }
  MonotoneCubic interp(src.points(), f.values());
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = interp(g[i]);
  }
  return GridFunction(g, std::move(out));
}

std::vector<double> difference(std::span<const double> x, std::span<const double> y,
                               DifferenceScheme scheme) {
  if (x.size() < 3 || x.size() != y.size()) {
    throw DataError("derivative: need at least 3 points");
  }
  if (scheme == DifferenceScheme::kCentral) {
    return central_difference(x, y);
  }
  return high_order_difference(x, y, detect_uniform({x.begin(), x.end()}));
}

GridFunction gaussian_smooth(const GridFunction& f, double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw ConfigError("gaussian_smooth: bandwidth must be positive");
  }
  const auto t = f.grid().points();
  const auto y = f.values();
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double z = (t[i] - t[j]) / bandwidth;
      const double w = std::exp(-0.5 * z * z);
      num += w * y[j];
      den += w;
    }
    out[i] = num / den;
  }
  return GridFunction(f.grid(), std::move(out));
}

GridFunction derivative(const GridFunction& f, const DerivativeOptions& options) {
  if (options.smoothing_bandwidth > 0.0) {
    return derivative(gaussian_smooth(f, options.smoothing_bandwidth),
                      {options.scheme, 0.0});
  }
  return GridFunction(f.grid(), difference(f.grid().points(), f.values(), options.scheme));
}

Srvf to_srvf(const GridFunction& f, const DerivativeOptions& options) {
  const GridFunction smoothed =
      options.smoothing_bandwidth > 0.0 ? gaussian_smooth(f, options.smoothing_bandwidth) : f;
  const Grid unit = f.grid().normalized();
  std::vector<double> d = difference(unit.points(), smoothed.values(), options.scheme);
  for (double& v : d) {
    v = std::copysign(std::sqrt(std::abs(v)), v);
    if (v == 0.0) v = 0.0;  // drop negative zero
  }
  return Srvf(unit, std::move(d), smoothed[0], f.grid());
}

GridFunction from_srvf(const Srvf& q) {
  const auto v = q.values();
  std::vector<double> velocity(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    velocity[i] = v[i] * std::abs(v[i]);
  }
  std::vector<double> f = cumulative_trapezoid(q.grid().points(), velocity);
  for (double& x : f) {
    x += q.anchor();
  }
  return GridFunction(q.source_grid(), std::move(f));
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
  }
  return s;
}

double trapezoid_product(std::span<const double> x, std::span<const double> a,
                         std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 0.5 * (x[i + 1] - x[i]) * (a[i] * b[i] + a[i + 1] * b[i + 1]);
  }
  return s;
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    out[i + 1] = out[i] + 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
  }
  return out;
}

double inner_product(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  return trapezoid_product(f.grid().points(), f.values(), g.values());
}

double l2_norm(const GridFunction& f) { return std::sqrt(std::max(0.0, inner_product(f, f))); }

double inner_product(const Srvf& a, const Srvf& b) {
  require_same_grid(a.grid(), b.grid(), "inner_product");
  return trapezoid_product(a.grid().points(), a.values(), b.values());
}

double l2_norm(const Srvf& q) { return std::sqrt(std::max(0.0, inner_product(q, q))); }

double squared_distance(const Srvf& a, const Srvf& b) {
  require_same_grid(a.grid(), b.grid(), "squared_distance");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = a[i] - b[i];
  }
  return trapezoid_product(a.grid().points(), d, d);
}

}  // namespace ecal
