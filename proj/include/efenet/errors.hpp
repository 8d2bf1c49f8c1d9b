#pragma once

#include <stdexcept>
#include <string>

namespace efenet {

// Precondition violations on shapes and arguments throw std::invalid_argument.
// The three classes below separate failures the command-line tool reports with
// distinct exit codes.

/// Bad or inconsistent configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable or malformed data files (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values in a loss, flow or parameter (exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace efenet
