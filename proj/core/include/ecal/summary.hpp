#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ecal/grid.hpp"

namespace ecal {

// Linearly interpolated sample quantile, p in [0,1].
double quantile(std::span<const double> x, double p);

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

// Central interval holding `level` of the draws.
Interval credible_interval(std::span<const double> x, double level = 0.95);

// Moves an endpoint onto a support bound lying within `tol_fraction` of the
// support width, so a posterior piled against a hard prior bound reports the
// bound itself.
Interval snap_to_support(Interval iv, double support_lo, double support_hi,
                         double tol_fraction = 0.01);

// Kolmogorov-Smirnov distance between the empirical CDF and U(lo, hi).
double ks_statistic_uniform(std::span<const double> x, double lo = 0.0, double hi = 1.0);

// Effective sample size from the initial monotone positive sequence of
// autocorrelations.
double effective_sample_size(std::span<const double> x);
double mcse_mean(std::span<const double> x);

struct Density2d {
  std::vector<double> x;  // node coordinates
  std::vector<double> y;
  Eigen::MatrixXd value;  // value(i, j) at (x[i], y[j])
};

// Gaussian product-kernel density estimate with Scott bandwidths.
Density2d kde_2d(std::span<const double> x, std::span<const double> y, int nodes = 128);

// Density level enclosing `mass` of the estimate and the area above it.
struct HpdRegion {
  double threshold;
  double area;
};
HpdRegion hpd_region(const Density2d& d, double mass = 0.95);

using Polyline = std::vector<std::pair<double, double>>;

// Closed iso-lines (first point repeated at the end) of `level`; the field is
// treated as zero outside its grid so every line closes.
std::vector<Polyline> contour_lines(const Density2d& d, double level);

struct Band {
  std::vector<double> lower;
  std::vector<double> median;
  std::vector<double> upper;
};

Band pointwise_band(std::span<const GridFunction> curves, double level = 0.95);

// Fraction of points with lower <= obs <= upper.
double band_coverage(const Band& band, std::span<const double> obs);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> density;
};
Histogram histogram(std::span<const double> x, int bins, double lo, double hi);

}  // namespace ecal
