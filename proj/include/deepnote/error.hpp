#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepnote {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter or precondition was invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A corpus, dataset, index or trace file could not be read.
class DataError : public Error {
 public:
  DataError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  /// 1-based line of the offending record, 0 when not line-specific.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structured model output (status token, query list, judge ids) was not found.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepnote
