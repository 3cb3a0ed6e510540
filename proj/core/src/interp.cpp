#include "ecal/interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecal/error.hpp"

namespace ecal {
namespace {

double end_slope(double h0, double h1, double m0, double m1) {
  double d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
  if (std::signbit(d) != std::signbit(m0) || m0 == 0.0) {
    return 0.0;
  }
  if (std::signbit(m0) != std::signbit(m1) && std::abs(d) > 3.0 * std::abs(m0)) {
    return 3.0 * m0;
  }
  return d;
}

std::size_t locate(const std::vector<double>& x, double t) {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  auto k = static_cast<std::size_t>(std::distance(x.begin(), it));
  return std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, x.size() - 2);
}

}  // namespace

MonotoneCubic::MonotoneCubic(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), slope_(x.size(), 0.0) {
  if (x_.size() != y_.size() || x_.size() < 2) {
    throw DataError("MonotoneCubic: need at least two knots with matching values");
  }
  const std::size_t n = x_.size();
  std::vector<double> h(n - 1), m(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    if (!(h[k] > 0.0)) {
      throw DataError("MonotoneCubic: knots must be strictly increasing");
    }
    m[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  if (n == 2) {
    slope_[0] = slope_[1] = m[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (m[k - 1] * m[k] <= 0.0) {
      slope_[k] = 0.0;
      continue;
    }
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    slope_[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
  }
  slope_[0] = end_slope(h[0], h[1], m[0], m[1]);
  slope_[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
}

double MonotoneCubic::operator()(double t) const {
  if (t < x_.front() || t > x_.back() || std::isnan(t)) {
    throw DataError("MonotoneCubic: extrapolation requested at t=" + std::to_string(t));
  }
  const std::size_t k = locate(x_, t);
  const double h = x_[k + 1] - x_[k];
  const double s = (t - x_[k]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * y_[k] + h10 * h * slope_[k] + h01 * y_[k + 1] + h11 * h * slope_[k + 1];
}

double linear_interp(std::span<const double> x, std::span<const double> y, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), t);
  const auto k = static_cast<std::size_t>(std::distance(x.begin(), it)) - 1;
  const double w = (t - x[k]) / (x[k + 1] - x[k]);
  return (1.0 - w) * y[k] + w * y[k + 1];
}

}  // namespace ecal
