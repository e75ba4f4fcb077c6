#include "gnnx/explain/gumbel.hpp"

#include <algorithm>
#include <cmath>

#include "gnnx/constraints/constraints.hpp"
#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"

namespace gnnx {
namespace {

double logit(double x) { return std::log(x) - std::log1p(-x); }

}  // namespace

double gumbel_sample(double p, double tau, double eps) {
  if (!(tau > 0.0)) throw DomainError("gumbel_sample: temperature must be positive");
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  eps = std::clamp(eps, kProbClamp, 1.0 - kProbClamp);
  const double z = (logit(eps) + logit(p)) / tau;
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double gumbel_sample(double p, double tau, Rng& rng) { return gumbel_sample(p, tau, rng.uniform_open()); }

Tensor gumbel_sample_logits(const Tensor& logits, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw DomainError("gumbel_sample: temperature must be positive");
  std::vector<double> noise(logits.numel());
  for (double& v : noise) v = logit(std::clamp(rng.uniform_open(), kProbClamp, 1.0 - kProbClamp));
  return ops::sigmoid(ops::mul_scalar(ops::add(logits, Tensor(logits.shape(), std::move(noise))), 1.0 / tau));
}

double annealed_temperature(double tau_start, double tau_end, std::size_t epoch, std::size_t num_epochs) {
  if (num_epochs <= 1) return tau_start;
  const double t = static_cast<double>(std::min(epoch, num_epochs - 1)) / static_cast<double>(num_epochs - 1);
  return tau_start * std::pow(tau_end / tau_start, t);
}

Tensor round_straight_through(const Tensor& sample) {
  std::vector<double> hard(sample.numel());
  for (std::size_t i = 0; i < hard.size(); ++i) hard[i] = sample[i] > 0.5 ? 1.0 : 0.0;
  return ops::straight_through(Tensor(sample.shape(), std::move(hard)), sample);
}

}  // namespace gnnx
