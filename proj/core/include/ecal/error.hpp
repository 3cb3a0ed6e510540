#pragma once

#include <stdexcept>
#include <string>

namespace ecal {

// Invalid configuration or arguments supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Input data violating a structural invariant (grid mismatch, non-finite
// values, wrong lengths, missing columns).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical procedure could not produce an admissible result
// (antipodal warp, outside injectivity radius, stuck sampler).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ecal
