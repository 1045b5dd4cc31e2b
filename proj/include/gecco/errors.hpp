#pragma once

#include <stdexcept>
#include <string>

namespace gecco {

// Error taxonomy shared by every module. The CLI maps these to exit codes:
// ConfigError -> 1, DataError -> 2, NumericError -> 3.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A NaN or Inf escaped an operation. Raised eagerly so divergence is caught
// at the op that produced it, not epochs later.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gecco
