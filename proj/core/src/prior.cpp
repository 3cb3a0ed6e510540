#include "ecal/prior.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "ecal/error.hpp"

namespace ecal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Prior Prior::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw ConfigError("uniform prior needs finite lo < hi");
  }
  return Prior(Kind::kUniform, lo, hi);
}

Prior Prior::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd)) {
    throw ConfigError("normal prior needs a finite mean and sd > 0");
  }
  return Prior(Kind::kNormal, mean, sd);
}

Prior Prior::inverse_gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw ConfigError("inverse_gamma prior needs shape > 0 and scale > 0");
  }
  return Prior(Kind::kInverseGamma, shape, scale);
}

bool Prior::in_support(double x) const {
  switch (kind_) {
    case Kind::kUniform:
      return x >= a_ && x <= b_;
    case Kind::kNormal:
      return std::isfinite(x);
    case Kind::kInverseGamma:
      return x > 0.0 && std::isfinite(x);
  }
  return false;
}

double Prior::log_pdf(double x) const {
  if (!in_support(x)) return -kInf;
  switch (kind_) {
    case Kind::kUniform:
      return -std::log(b_ - a_);
    case Kind::kNormal: {
      const double z = (x - a_) / b_;
      return -0.5 * z * z - std::log(b_) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case Kind::kInverseGamma:
      return a_ * std::log(b_) - std::lgamma(a_) - (a_ + 1.0) * std::log(x) - b_ / x;
  }
  return -kInf;
}

double Prior::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case Kind::kUniform:
      return std::uniform_real_distribution<double>(a_, b_)(rng);
    case Kind::kNormal:
      return std::normal_distribution<double>(a_, b_)(rng);
    case Kind::kInverseGamma:
      return 1.0 / std::gamma_distribution<double>(a_, 1.0 / b_)(rng);
  }
  return 0.0;
}

double Prior::mean() const {
  switch (kind_) {
    case Kind::kUniform:
      return 0.5 * (a_ + b_);
    case Kind::kNormal:
      return a_;
    case Kind::kInverseGamma:
      return a_ > 1.0 ? b_ / (a_ - 1.0) : kInf;
  }
  return 0.0;
}

double Prior::sd() const {
  switch (kind_) {
    case Kind::kUniform:
      return (b_ - a_) / std::sqrt(12.0);
    case Kind::kNormal:
      return b_;
    case Kind::kInverseGamma:
      return a_ > 2.0 ? mean() / std::sqrt(a_ - 2.0) : kInf;
  }
  return 0.0;
}

double Prior::lower() const {
  switch (kind_) {
    case Kind::kUniform:
      return a_;
    case Kind::kNormal:
      return -kInf;
    case Kind::kInverseGamma:
      return 0.0;
  }
  return -kInf;
}

double Prior::upper() const { return kind_ == Kind::kUniform ? b_ : kInf; }

nlohmann::json Prior::to_json() const {
  switch (kind_) {
    case Kind::kUniform:
      return {{"kind", "uniform"}, {"lo", a_}, {"hi", b_}};
    case Kind::kNormal:
      return {{"kind", "normal"}, {"mean", a_}, {"sd", b_}};
    case Kind::kInverseGamma:
      return {{"kind", "inverse_gamma"}, {"shape", a_}, {"scale", b_}};
  }
  return {};
}

Prior Prior::from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "uniform") return uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    if (kind == "normal") return normal(j.at("mean").get<double>(), j.at("sd").get<double>());
    if (kind == "inverse_gamma") {
      return inverse_gamma(j.at("shape").get<double>(), j.at("scale").get<double>());
    }
    throw ConfigError("unknown prior kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("prior spec: ") + e.what());
  }
}

}  // namespace ecal
