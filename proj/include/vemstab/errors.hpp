#pragma once

// Error taxonomy shared across the library. The three classes map onto the
// CLI exit codes: ConfigError -> 2, NonConvergence -> 3, NumericalError -> 4.

#include <stdexcept>
#include <string>

namespace vemstab {

// Invalid user input: malformed mesh/config files, out-of-range parameters.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Newton failed to reach tolerance within the iteration budget.
struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Hard numerical failure: inverted element (det F <= 0) or factorization failure.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what, int cell = -1)
      : std::runtime_error(what), cell_id(cell) {}
  int cell_id;  // offending cell when known, -1 otherwise
};

}  // namespace vemstab
