#include "gnnx/tensor/params.hpp"

#include <bit>
#include <cmath>

#include "gnnx/error.hpp"

namespace gnnx {

void ParameterSet::set(const std::string& name, Tensor value) { params_[name] = std::move(value); }

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("ParameterSet: no parameter named '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

ParameterSet ParameterSet::track(Tape& tape) const {
  ParameterSet out;
  for (const auto& [name, t] : params_) out.set(name, tape.variable(t));
  return out;
}

ParameterSet::Map ParameterSet::gradients(const ParameterSet& tracked, const Gradients& grads) {
  Map out;
  for (const auto& [name, t] : tracked) out.emplace(name, grads.of(t));
  return out;
}

std::uint64_t ParameterSet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, t] : params_) {
    for (char c : name) mix(static_cast<unsigned char>(c));
    for (std::size_t extent : t.shape()) mix(extent);
    for (double v : t.data()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor({fan_in, fan_out}, std::move(values));
}

}  // namespace gnnx
