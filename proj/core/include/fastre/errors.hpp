#pragma once

#include <stdexcept>
#include <string>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

// Input that violates a documented contract: bad shapes, malformed files,
// schema inconsistencies. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed, truncated or foreign checkpoint files.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failures during an otherwise valid run (e.g. loss became NaN).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

FASTRE_END_NAMESPACE
