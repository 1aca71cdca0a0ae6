#pragma once

#include <stdexcept>
#include <string>

namespace wee {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a vector claimed to be a probability distribution is not one.
struct DistributionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DeterminismError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wee
