#pragma once

#include <stdexcept>
#include <string>

namespace rhetseg {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// exit codes: usage errors -> 1, data/validation errors -> 2, divergence -> 3.

struct ArgumentError : std::invalid_argument {
  explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StateError : std::runtime_error {
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CurationError : std::runtime_error {
  explicit CurationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TieError : std::runtime_error {
  explicit TieError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CoverageError : std::runtime_error {
  explicit CoverageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rhetseg
