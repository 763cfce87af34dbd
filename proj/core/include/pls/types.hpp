#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pls {

/// Pair of target returns (R, G) steering a return-conditioned policy.
struct TargetReturn {
  double reward = 0.0;
  double cost = 0.0;

  friend bool operator==(const TargetReturn&, const TargetReturn&) = default;
};

/// Raised when a factorization or other numerical step cannot proceed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an internal invariant of an algorithm is broken.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Deterministic child seed for stream `index` of `master`.
///
/// splitmix64 finalizer applied to master + (index + 1) * 0x9E3779B97F4A7C15.
/// Every seeded component of the library derives its sub-streams through this
/// function, so results do not depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

}  // namespace pls
