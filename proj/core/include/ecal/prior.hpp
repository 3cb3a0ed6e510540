#pragma once

#include <random>

#include <nlohmann/json_fwd.hpp>

namespace ecal {

class Prior {
 public:
  enum class Kind { kUniform, kNormal, kInverseGamma };

  static Prior uniform(double lo, double hi);
  static Prior normal(double mean, double sd);
  // Density proportional to x^(-shape-1) exp(-scale / x) on x > 0.
  static Prior inverse_gamma(double shape, double scale);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  double log_pdf(double x) const;
  bool in_support(double x) const;
  double sample(std::mt19937_64& rng) const;
  double mean() const;
  double sd() const;
  // Support bounds; infinite where unbounded.
  double lower() const;
  double upper() const;

  nlohmann::json to_json() const;
  static Prior from_json(const nlohmann::json& j);

 private:
  Prior(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

}  // namespace ecal
