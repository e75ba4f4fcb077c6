#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gnnx/tensor/params.hpp"

namespace gnnx {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates of one parameter tensor.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

// One bias-corrected Adam update of `param` in place.
void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state, const AdamConfig& config);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every parameter that has an entry in `grads`.
  void step(ParameterSet& params, const ParameterSet::Map& grads);

  AdamConfig& config() { return config_; }

 private:
  AdamConfig config_;
  std::map<std::string, AdamMoments> state_;
};

}  // namespace gnnx
