#include "gnnx/tensor/optim.hpp"

#include <cmath>

#include "gnnx/error.hpp"

namespace gnnx {

void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state, const AdamConfig& config) {
  if (grad.size() != param.size()) throw DimensionError("adam_step: gradient size differs from parameter size");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  if (state.m.size() != param.size() || state.v.size() != param.size()) {
    throw DimensionError("adam_step: moment size differs from parameter size");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    param[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void Adam::step(ParameterSet& params, const ParameterSet::Map& grads) {
  for (const auto& [name, grad] : grads) {
    const Tensor& current = params.get(name);
    if (current.shape() != grad.shape()) {
      throw DimensionError("Adam: gradient shape " + shape_string(grad.shape()) + " differs for '" + name + "'");
    }
    std::vector<double> values = current.values();
    adam_step(values, grad.data(), state_[name], config_);
    for (double v : values) {
      if (!std::isfinite(v)) throw NumericalError("Adam: non-finite parameter '" + name + "'");
    }
    params.set(name, Tensor(current.shape(), std::move(values)));
  }
}

}  // namespace gnnx
