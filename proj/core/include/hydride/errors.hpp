#pragma once

#include <stdexcept>

namespace hydride {

// Error hierarchy; the CLI maps each class to a distinct exit code.

/// Malformed textual input (formulas, CIF blocks, CSV rows, graph files).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition or type invariant was violated.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A required input file or prior-stage output is absent.
struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numeric computation diverged (NaN loss, exhausted retries).
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hydride
