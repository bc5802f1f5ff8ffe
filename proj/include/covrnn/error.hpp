#pragma once

#include <stdexcept>
#include <string>

namespace covrnn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries the byte offset or field path.
struct ParseError : Error {
  using Error::Error;
};

// Shapes that do not chain or do not agree.
struct DimensionError : Error {
  using Error::Error;
};

// Out-of-range or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace covrnn
