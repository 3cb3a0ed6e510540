#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "ecal/calibrate.hpp"

namespace ecal::test {

// Forward model from a plain function of (experiment, theta).
class FunctionForward final : public ForwardModel {
 public:
  using Fn = std::function<ForwardOutput(std::size_t, std::span<const double>)>;
  explicit FunctionForward(Fn fn) : fn_(std::move(fn)) {}
  ForwardOutput evaluate(std::size_t experiment, const Experiment&,
                         std::span<const double> theta) const override {
    return fn_(experiment, theta);
  }
  void check(const Experiment&, bool) const override {}

 private:
  Fn fn_;
};

inline std::shared_ptr<const ForwardModel> forward_from(FunctionForward::Fn fn) {
  return std::make_shared<FunctionForward>(std::move(fn));
}

inline Experiment experiment(const Grid& g, std::vector<double> aligned,
                             std::vector<double> shooting = {}) {
  const Grid unit = g.normalized();
  if (shooting.empty()) shooting.assign(g.size(), 0.0);
  return Experiment{GridFunction(g, std::move(aligned)), ShootingVector(unit, std::move(shooting)), {}};
}

}  // namespace ecal::test
