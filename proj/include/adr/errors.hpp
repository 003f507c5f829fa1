#pragma once

#include <stdexcept>
#include <string>

namespace adr {

// Malformed or inconsistent input data (bad TSV line, span out of bounds, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checkpoint or vocabulary does not fit the runtime configuration.
class MismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adr
