#pragma once

#include <stdexcept>
#include <string>

namespace dtsc {

// Runtime failure (bad state, numeric breakdown, I/O). CLI maps it to exit 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or user input. CLI maps it to exit 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace dtsc
