#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fel {

/// Input rejected before any numerics ran. Carries every violation found.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}
  explicit ValidationError(const std::string& message)
      : ValidationError(std::vector<std::string>{message}) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += "; ";
      out += item;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

/// Non-finite state or a failed numerical contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invariant drift exceeded the configured tolerance.
class ConservationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace fel
