#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace donn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or grids of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The caller asked for something unsupported (bad preset, empty list, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Dataset or checkpoint content failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared inside a forward/backward pass.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::optional<int> layer)
      : Error(layer ? what + " (layer " + std::to_string(*layer) + ")" : what),
        layer_(layer) {}

  std::optional<int> layer() const { return layer_; }

 private:
  std::optional<int> layer_;
};

}  // namespace donn
