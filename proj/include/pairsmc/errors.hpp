#ifndef PAIRSMC_ERRORS_HPP
#define PAIRSMC_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pairsmc {

/// A precondition of a library call was not met.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every importance weight at some step was zero: the particle system died.
class DegenerateWeights : public std::runtime_error {
 public:
  explicit DegenerateWeights(std::size_t step, std::optional<std::size_t> replicate = {})
      : std::runtime_error(describe(step, replicate)), step_(step), replicate_(replicate) {}

  std::size_t step() const noexcept { return step_; }
  std::optional<std::size_t> replicate() const noexcept { return replicate_; }

 private:
  static std::string describe(std::size_t step, std::optional<std::size_t> replicate) {
    std::string msg = "all importance weights vanished at step " + std::to_string(step);
    if (replicate) msg += " (replicate " + std::to_string(*replicate) + ")";
    return msg;
  }

  std::size_t step_;
  std::optional<std::size_t> replicate_;
};

/// Both halves of a pair carry zero weight, so the coalescence probability is undefined.
class DegeneratePair : public std::runtime_error {
 public:
  explicit DegeneratePair(std::size_t step)
      : std::runtime_error("coalescence probability undefined at step " + std::to_string(step) +
                           ": both halves of a pair have zero weight"),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// An exact computation would exceed its memory or time budget.
class CapacityExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace pairsmc

#endif  // PAIRSMC_ERRORS_HPP
