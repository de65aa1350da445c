#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdfb {

// Caller broke a documented precondition (shape, range, length).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input sequence shorter than a layer's receptive field.
class InputTooShort : public ContractViolation {
 public:
  InputTooShort(const std::string& what, std::size_t got, std::size_t minimum)
      : ContractViolation(what + ": input length " + std::to_string(got) +
                          " is shorter than the minimum " +
                          std::to_string(minimum)),
        length_(got),
        minimum_(minimum) {}

  std::size_t length() const { return length_; }
  std::size_t minimum() const { return minimum_; }

 private:
  std::size_t length_;
  std::size_t minimum_;
};

// A function evaluation produced NaN or infinity.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite gradient reached the optimizer.
class DivergenceError : public NumericalFailure {
 public:
  explicit DivergenceError(const std::string& param_name)
      : NumericalFailure("non-finite gradient in parameter '" + param_name + "'"),
        param_(param_name) {}
  const std::string& param() const { return param_; }

 private:
  std::string param_;
};

class UnsupportedFormat : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tdfb
