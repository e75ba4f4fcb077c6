#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gnnx/tensor/tensor.hpp"

// Differentiable primitives. Every function records itself on the tape of its
// tracked arguments (if any) and throws NumericalError if it would produce a
// non-finite value.
namespace gnnx::ops {

// [m x k] x [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise binary ops accept equal shapes, or one operand with a single
// element (scalar broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
// c - x
Tensor rsub_scalar(double c, const Tensor& x);

Tensor neg(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Natural log; DomainError on a non-positive entry.
Tensor log(const Tensor& x);
Tensor exp(const Tensor& x);
// sqrt with derivative 0 at x == 0 (subgradient choice).
Tensor sqrt(const Tensor& x);
// Gradient passes where lo <= x <= hi and is zero outside.
Tensor clamp(const Tensor& x, double lo, double hi);

// Reductions. With no axis the result is a rank-0 scalar; with an axis the
// axis is removed. `max` routes its adjoint to the first argmax only.
Tensor sum(const Tensor& x, std::optional<std::size_t> axis = std::nullopt);
Tensor mean(const Tensor& x, std::optional<std::size_t> axis = std::nullopt);
Tensor max(const Tensor& x, std::optional<std::size_t> axis = std::nullopt);

Tensor reshape(const Tensor& x, Shape shape);

// [m x d] + [d] broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// [m x p] | [m x q] -> [m x (p+q)]
Tensor concat_cols(const Tensor& a, const Tensor& b);
// Rows of x at the given indices: [len x d].
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
// out[index[i]] += x[i]; out has `num_rows` rows.
Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t num_rows);
// Row i of x scaled by w[i]; differentiable in both.
Tensor scale_rows(const Tensor& x, const Tensor& w);
// Column j of x scaled by s[j]; differentiable in both.
Tensor scale_cols(const Tensor& x, const Tensor& s);
// Columnwise max over the rows of each segment: [n x d] -> [num_segments x d].
// Every segment must be non-empty.
Tensor segment_max(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments);
// Row-wise log-softmax of [m x c].
Tensor log_softmax_rows(const Tensor& x);
// out[i] = x[i, index[i]] for a [m x c] tensor.
Tensor pick(const Tensor& x, std::span<const std::size_t> index);
// Mean cross-entropy of [m x c] logits against class targets.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets);

// Forward value of `hard`, gradient of `soft` (straight-through estimator).
Tensor straight_through(const Tensor& hard, const Tensor& soft);

}  // namespace gnnx::ops
