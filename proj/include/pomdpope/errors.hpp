#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pomdpope {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed model/policy/trajectory data (dimension mismatch, bad simplex, ...).
struct StructuralError : Error {
  using Error::Error;
};

/// Exact-mode enumeration would exceed the configured cap.
struct CapacityError : Error {
  CapacityError(const std::string& what, std::uint64_t required, std::uint64_t cap)
      : Error(what + " (required enumeration size " + std::to_string(required) +
              " exceeds cap " + std::to_string(cap) + ")"),
        required(required),
        cap(cap) {}
  std::uint64_t required;
  std::uint64_t cap;
};

/// Operation defined only for a restricted policy class (usually memoryless).
struct UnsupportedPolicyError : Error {
  using Error::Error;
};

/// Belief or conditional quantity requested on a probability-zero history.
struct ZeroProbabilityHistoryError : Error {
  using Error::Error;
};

/// A revealing matrix is singular under the configured threshold.
struct RevealingViolationError : Error {
  RevealingViolationError(const std::string& what, int step)
      : Error(what + " at step " + std::to_string(step)), step(step) {}
  int step;
};

/// Zero-return future makes the return-weighted diagonal non-invertible.
struct DegenerateWeightError : Error {
  using Error::Error;
};

/// Occupancy prior has a zero entry where a strictly positive one is required.
struct DegeneratePriorError : Error {
  using Error::Error;
};

/// Model class became empty (typically: everything was pre-filtered out).
struct EmptyClassError : Error {
  using Error::Error;
};

/// A dataset trajectory has probability zero under the candidate model.
struct ZeroLikelihoodError : Error {
  ZeroLikelihoodError(const std::string& what, std::size_t trajectoryIndex)
      : Error(what + " (trajectory index " + std::to_string(trajectoryIndex) + ")"),
        trajectoryIndex(trajectoryIndex) {}
  std::size_t trajectoryIndex;
};

/// Rejection sampling exhausted its attempt budget.
struct GenerationFailureError : Error {
  using Error::Error;
};

/// Invalid user-supplied parameter (e.g. horizon too small).
struct ParameterError : Error {
  using Error::Error;
};

}  // namespace pomdpope
