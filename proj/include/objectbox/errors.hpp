#pragma once

#include <stdexcept>
#include <string>

namespace objectbox {

// Zero-area boxes, degenerate cover regions and similar.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value lies outside the interval a decode head can represent.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Bad configuration values (strides, thresholds, fit settings).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input files. The message names the path and the field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace objectbox
