#pragma once

#include <stdexcept>
#include <string>

namespace exprfuse {

// Bad user input: malformed files, invalid vectors, mismatched shapes.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures (missing file, unwritable directory). Exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A broken internal invariant; indicates a bug, not bad input. Exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace exprfuse
