#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ecal {

/// Strictly increasing abscissa shared by a family of curves.
///
/// Copies are cheap: the points are held behind a shared immutable buffer, so
/// curves produced from one grid can be compared by identity before falling
/// back to an element-wise check.
class Grid {
 public:
  explicit Grid(std::vector<double> points);

  static Grid uniform(double lo, double hi, std::size_t n);
  static Grid unit(std::size_t n) { return uniform(0.0, 1.0, n); }

  std::size_t size() const noexcept { return points_->size(); }
  double operator[](std::size_t i) const { return (*points_)[i]; }
  double front() const noexcept { return points_->front(); }
  double back() const noexcept { return points_->back(); }
  std::span<const double> points() const noexcept { return *points_; }

  bool uniform_spacing() const noexcept { return uniform_; }
  bool is_unit() const noexcept { return front() == 0.0 && back() == 1.0; }

  // Affine image on [0,1]; the endpoints map to exactly 0 and 1.
  Grid normalized() const;
  // Affine image on [lo,hi].
  Grid rescaled(double lo, double hi) const;

  // True when both grids hold the same points up to `rel_tol` of the span.
  bool matches(const Grid& other, double rel_tol = 1e-10) const;

 private:
  std::shared_ptr<const std::vector<double>> points_;
  bool uniform_ = false;
};

/// A real-valued function sampled on a Grid.
class GridFunction {
 public:
  GridFunction(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Square-root velocity representation q = sign(f') sqrt(|f'|) on the
/// normalized [0,1] grid. The source grid and the initial value are retained
/// so the curve can be reconstructed in its own units.
class Srvf {
 public:
  Srvf(Grid unit_grid, std::vector<double> values, double anchor = 0.0);
  Srvf(Grid unit_grid, std::vector<double> values, double anchor, Grid source_grid);

  const Grid& grid() const noexcept { return grid_; }
  const Grid& source_grid() const noexcept { return source_grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double anchor() const noexcept { return anchor_; }

 private:
  Grid grid_;
  Grid source_grid_;
  std::vector<double> values_;
  double anchor_;
};

enum class DifferenceScheme {
  // Five-point centered stencil on uniform grids (three-point on non-uniform
  // grids), second-order one-sided at the ends.
  kHighOrder,
  // Three-point centered interior, first-order one-sided ends. Never changes
  // sign on monotone data, so it is the one used for warping functions.
  kCentral,
};

struct DerivativeOptions {
  DifferenceScheme scheme = DifferenceScheme::kHighOrder;
  // Gaussian kernel bandwidth in the curve's own time units; 0 disables.
  double smoothing_bandwidth = 0.0;
};

// Monotone cubic (PCHIP) interpolation of f at the points of g.
GridFunction resample(const GridFunction& f, const Grid& g);

GridFunction derivative(const GridFunction& f, const DerivativeOptions& options = {});

// Nadaraya-Watson smoother with a Gaussian kernel.
GridFunction gaussian_smooth(const GridFunction& f, double bandwidth);

Srvf to_srvf(const GridFunction& f, const DerivativeOptions& options = {});
GridFunction from_srvf(const Srvf& q);

// Trapezoidal L2 inner product on a shared grid.
double inner_product(const GridFunction& f, const GridFunction& g);
double l2_norm(const GridFunction& f);

double inner_product(const Srvf& a, const Srvf& b);
double l2_norm(const Srvf& q);
// ||a - b||^2
double squared_distance(const Srvf& a, const Srvf& b);

// Raw trapezoid helpers.
double trapezoid(std::span<const double> x, std::span<const double> y);
double trapezoid_product(std::span<const double> x, std::span<const double> a,
                         std::span<const double> b);
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y);
std::vector<double> difference(std::span<const double> x, std::span<const double> y,
                               DifferenceScheme scheme);

}  // namespace ecal
