#pragma once

#include <stdexcept>
#include <string>

namespace xmodel {

// Base class for every error raised by the library. Callers that only care
// about "the library rejected this" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A tensor op received inputs whose shapes do not conform to its rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A config file or config object failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or corrupted on-disk data (vocab files, checkpoints, task files).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace xmodel
