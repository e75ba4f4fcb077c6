#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "gnnx/random.hpp"
#include "gnnx/tensor/tensor.hpp"

namespace gnnx {

class Tape;
class Gradients;

// Named parameter tensors, iterated in name order.
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor>;

  void set(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;

  const Map& items() const { return params_; }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Copies every parameter onto the tape as a leaf.
  ParameterSet track(Tape& tape) const;
  // Gradient for each tracked parameter, keyed by name.
  static Map gradients(const ParameterSet& tracked, const Gradients& grads);

  // Order-sensitive 64-bit FNV-1a digest of names, shapes and value bits.
  std::uint64_t checksum() const;

 private:
  Map params_;
};

// Fan-based uniform initialisation in +/- sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace gnnx
