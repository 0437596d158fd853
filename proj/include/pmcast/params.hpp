#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pmcast/tensor.hpp"

namespace pmcast::ad {

/// Trainable tensor plus its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> grad;

  Parameter(std::string n, Tensor v);
  void zero_grad();
};

/// Ordered, named parameters with stable addresses.
///
/// Checkpoint format (text, one record per parameter, in insertion order):
///
///     pmcast-params 1 <count>
///     <name> <rank> <dim_0> ... <dim_{rank-1}>
///     <value_0> <value_1> ...
///
/// Values are written with the shortest decimal form that parses back to the
/// same double, so save/load round-trips bit-exactly.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter& add(std::string name, Tensor value);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }
  Parameter& find(const std::string& name);

  std::size_t scalar_count() const;
  void zero_grad();

  void save(std::ostream& out) const;
  /// Overwrites values of an existing set; names and shapes must match.
  void load(std::istream& in);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

  /// Copies values from another set with identical layout.
  void assign_values(const ParameterSet& other);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace pmcast::ad
