#pragma once

#include <stdexcept>
#include <string>

namespace pmcast {

/// Tensor shapes that do not line up for an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Integer index outside its table, e.g. an unencoded category code.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Weight-norm direction vector with zero length.
class DegenerateWeightError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller violated an API contract (non-scalar loss, empty input, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid numeric parameter (negative noise ratio, zero trials, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input file does not match the documented column schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Timestamps out of order or duplicated.
class OrderingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace pmcast
