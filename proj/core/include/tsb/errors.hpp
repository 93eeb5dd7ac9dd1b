#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsb {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnequalSizes : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct TooFewPoints : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotInvertible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularPoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConstantFeature : std::runtime_error {
  explicit ConstantFeature(std::size_t feature_index)
      : std::runtime_error("feature " + std::to_string(feature_index) +
                           " is constant"),
        index(feature_index) {}
  std::size_t index;
};

struct MissingCache : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration problems carry a JSON-pointer style path to the bad field.
struct ConfigError : std::runtime_error {
  ConfigError(std::string json_pointer, const std::string& message)
      : std::runtime_error(json_pointer + ": " + message),
        pointer(std::move(json_pointer)) {}
  std::string pointer;
};

}  // namespace tsb
