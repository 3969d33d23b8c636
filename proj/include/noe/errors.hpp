#pragma once

#include <stdexcept>
#include <string>

namespace noe {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model file could not be read or is not valid JSON.
struct ParseError : Error {
  using Error::Error;
};

// Model file parsed but violates an invariant; message names the field.
struct ValidationError : Error {
  using Error::Error;
};

// Number-constraint denominator vanished: all occupations pinned at
// extremal values, the zero-temperature plateau has been reached.
struct DegenerateConstraint : Error {
  using Error::Error;
};

// Propagation produced an out-of-range or non-finite state.
struct StepUnstable : Error {
  using Error::Error;
};

struct NonPositiveZ : Error {
  using Error::Error;
};

struct NonPositiveTemperature : Error {
  using Error::Error;
};

// Requested spectrum grid violates the sampling limit of the ACF.
struct NyquistError : Error {
  using Error::Error;
};

}  // namespace noe
