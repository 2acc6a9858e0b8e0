#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace puforge {

/// Input that violates an operation's precondition (bad dimensions, out-of-range knobs).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two structures that must agree do not (overlapping partitions, duplicated examples).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A loss or parameter became non-finite. Carries where in training it happened.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what), message_(what) {}

  NumericError(const std::string& what, std::string stage, std::optional<std::size_t> epoch,
               std::optional<std::size_t> step)
      : std::runtime_error(format(what, stage, epoch, step)),
        message_(what),
        stage_(std::move(stage)),
        epoch_(epoch),
        step_(step) {}

  [[nodiscard]] NumericError with_context(std::string stage, std::size_t epoch,
                                          std::size_t step) const {
    return NumericError(message_, std::move(stage), epoch, step);
  }

  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
  [[nodiscard]] std::optional<std::size_t> epoch() const noexcept { return epoch_; }
  [[nodiscard]] std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  static std::string format(const std::string& what, const std::string& stage,
                            std::optional<std::size_t> epoch, std::optional<std::size_t> step) {
    std::string out = what;
    if (!stage.empty()) out += " [stage=" + stage;
    if (epoch) out += " epoch=" + std::to_string(*epoch);
    if (step) out += " step=" + std::to_string(*step);
    if (!stage.empty()) out += "]";
    return out;
  }

  std::string message_;
  std::string stage_;
  std::optional<std::size_t> epoch_;
  std::optional<std::size_t> step_;
};

/// Malformed input file. line() is 1-based; 0 when the failure is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace puforge
