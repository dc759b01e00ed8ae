#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched dimensions between containers that must agree.
struct ShapeError : Error {
  using Error::Error;
};

// A value outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Linear system with no usable pivot; `column` is the offending column.
struct SingularError : Error {
  std::size_t column;
  SingularError(const std::string& msg, std::size_t col) : Error(msg), column(col) {}
};

// Malformed serialized document.
struct ParseError : Error {
  using Error::Error;
};

// Computation produced a non-finite result it cannot recover from.
struct NumericError : Error {
  using Error::Error;
};

// Filesystem trouble surfaced by the tooling layer.
struct IoError : Error {
  using Error::Error;
};

}  // namespace rdr
