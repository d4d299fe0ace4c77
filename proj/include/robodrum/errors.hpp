#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace robodrum {

/// Bad or inconsistent configuration (wrong sample rate mid-stream,
/// unknown config key, invalid parameter combination).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (files, streams).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An event cannot be placed on the timeline (dispatch before zero,
/// beat interval shorter than the actuation latency).
class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-format parse failure carrying the 1-based offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace robodrum
