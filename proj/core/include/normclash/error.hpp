#pragma once

#include <stdexcept>
#include <string>

namespace normclash {

// Shape disagreement inside a tensor primitive; the message names the
// primitive and both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated input file (IDX, checkpoint).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration. `field()` is a JSON-pointer-like path to the
// offending entry, e.g. "defenses[2].kind".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Training loss became NaN or infinite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch, const std::string& message)
      : std::runtime_error(message), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

// Misuse of the autodiff tape (non-scalar backward, tape reused).
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace normclash
