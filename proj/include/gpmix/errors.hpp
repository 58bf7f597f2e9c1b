#pragma once

#include <stdexcept>
#include <string>

namespace gpmix {

// Cholesky factorization failed even after jitter escalation.
struct NonPositiveDefinite : std::runtime_error {
  explicit NonPositiveDefinite(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector lengths disagree (t vs y, partitions, grids, ...).
struct LengthMismatch : std::invalid_argument {
  explicit LengthMismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

// A timestamp could not be matched to a grid position within tolerance.
struct UnresolvedTimestamp : std::invalid_argument {
  explicit UnresolvedTimestamp(const std::string& msg) : std::invalid_argument(msg) {}
};

// The same individual carries two observations at the same timestamp.
struct DuplicateWithinIndividual : std::invalid_argument {
  explicit DuplicateWithinIndividual(const std::string& msg) : std::invalid_argument(msg) {}
};

// Objective returned NaN/Inf at the optimizer starting point.
struct NonFiniteObjective : std::runtime_error {
  explicit NonFiniteObjective(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (CSV/JSON parse or schema violation).
struct DataFormatError : std::invalid_argument {
  explicit DataFormatError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace gpmix
