#pragma once

#include <span>
#include <vector>

namespace ecal {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Butland
/// slopes). Never overshoots the data between knots, which keeps resampled
/// shock fronts free of ringing.
class MonotoneCubic {
 public:
  MonotoneCubic(std::span<const double> x, std::span<const double> y);

  // Throws DataError outside [x.front(), x.back()].
  double operator()(double t) const;

  double lower() const noexcept { return x_.front(); }
  double upper() const noexcept { return x_.back(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

// Piecewise-linear interpolation; `t` is clamped to the knot range.
double linear_interp(std::span<const double> x, std::span<const double> y, double t);

}  // namespace ecal
