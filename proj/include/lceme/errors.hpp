#pragma once

#include <stdexcept>
#include <string>

namespace lceme {

// Base error for everything the library throws deliberately.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/size disagreements (vector dims, roster sizes, weight counts).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Violated numeric hypotheses (e.g. eta > 1/(2L)) and solver failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Bad experiment config files: unknown keys, unparsable values, bad ranges.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File-level failures: missing files, short reads, bad magic numbers.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lceme
