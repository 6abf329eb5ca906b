#pragma once

#include <stdexcept>
#include <string>

namespace lka {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument or precondition violated by the caller.
struct InvalidArgument : Error {
  using Error::Error;
};

// Quadrature, least squares or mask construction could not produce a valid object.
struct ConstructionFailure : Error {
  using Error::Error;
};

// Ratio-normalized estimator queried where the data puts (almost) no mass.
struct OutOfSupport : Error {
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace lka
