#pragma once

#include <cstddef>

#include "gnnx/random.hpp"
#include "gnnx/tensor/tensor.hpp"

namespace gnnx {

// Binary concrete relaxation: m = sigmoid((logit(eps) + logit(p)) / tau) for a
// given uniform draw eps.
double gumbel_sample(double p, double tau, double eps);
double gumbel_sample(double p, double tau, Rng& rng);

// Relaxed sample for a tensor of logits of p; eps is drawn per entry and
// treated as a constant, so the result is differentiable in the logits.
Tensor gumbel_sample_logits(const Tensor& logits, double tau, Rng& rng);

// Rounds a relaxed sample to {0,1} at 0.5 in the forward pass while passing
// gradients to the relaxed values.
Tensor round_straight_through(const Tensor& sample);

// Geometric interpolation from tau_start (epoch 0) to tau_end (last epoch).
double annealed_temperature(double tau_start, double tau_end, std::size_t epoch, std::size_t num_epochs);

}  // namespace gnnx
