#pragma once

#include <stdexcept>
#include <string>

namespace lcsim {

/// Input that violates an operation's contract (bad angle, bad dimensions, ...).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Structurally valid input whose content fails validation (negative mass,
/// malformed document, broken locality structure).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A model whose total mass is not 1 where a probability measure is required.
class NormalizationError : public ValidationError {
public:
  NormalizationError(const std::string& what, double mass)
      : ValidationError(what + " (total mass " + std::to_string(mass) + ")"),
        mass_(mass) {}
  double mass() const noexcept { return mass_; }

private:
  double mass_;
};

/// A file that cannot be opened or read.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An estimator whose sample set is empty, e.g. no coincident detections.
class EmptySampleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace lcsim
