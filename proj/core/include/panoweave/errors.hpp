#pragma once

#include <stdexcept>
#include <string>

namespace panoweave {

/// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An argument value is outside its documented domain (bad angle, bad size,
/// polygon not star-shaped, ...).
struct DomainError : Error {
  using Error::Error;
};

/// Tensor or matrix shapes do not line up.
struct ShapeError : Error {
  using Error::Error;
};

/// Input data is unusable: non-finite entries, empty sets, inconsistent
/// records.
struct DataError : Error {
  using Error::Error;
};

/// A file does not follow the format it claims (magic, truncation, bad keys).
struct FormatError : Error {
  using Error::Error;
};

/// Numerical failure at run time, e.g. the training loss became non-finite.
struct NumericError : Error {
  using Error::Error;
};

/// An invariant the library is supposed to uphold failed anyway; indicates
/// a bug rather than bad input.
struct InternalError : Error {
  using Error::Error;
};

}  // namespace panoweave
