#pragma once

#include <stdexcept>
#include <string>

namespace adas {

// Wrong shapes, mismatched parameters, invalid thresholds.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed in data that violates a documented precondition.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Document parsed but does not satisfy its schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric that cannot be computed (e.g. AP with no ground truth).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adas
