#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gnnx/tensor/ops.hpp"
#include "support/gradcheck.hpp"

namespace gnnx::testing {

// A differentiable primitive under test: draws random inputs and maps tracked
// inputs to an output tensor.
struct PrimitiveCase {
  std::string name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  std::function<Tensor(const std::vector<Tensor>&)> op;
};

// Contracts an arbitrary output with a fixed random weight so every output
// entry contributes a distinct coefficient to the scalar loss.
inline Tensor weighted_total(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor w = random_tensor(out.shape(), rng);
  return ops::sum(ops::mul(out, w));
}

inline std::vector<PrimitiveCase> primitive_cases() {
  using In = std::vector<Tensor>;
  auto mat = [](std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    return [=](Rng& rng) { return In{random_tensor({r, c}, rng, lo, hi)}; };
  };
  auto two = [](Shape a, Shape b, double lo = -1.0, double hi = 1.0) {
    return [=](Rng& rng) { return In{random_tensor(a, rng, lo, hi), random_tensor(b, rng, lo, hi)}; };
  };
  static const std::vector<std::size_t> rows_index{2, 0, 2, 1, 3};
  static const std::vector<std::size_t> segments{0, 1, 0, 2, 1, 2};
  static const std::vector<std::size_t> classes{1, 0, 2, 2};
  return {
      {"matmul", two({3, 4}, {4, 2}), [](const In& x) { return ops::matmul(x[0], x[1]); }},
      {"add", two({3, 2}, {3, 2}), [](const In& x) { return ops::add(x[0], x[1]); }},
      {"add_broadcast", two({3, 2}, {}), [](const In& x) { return ops::add(x[0], x[1]); }},
      {"sub", two({3, 2}, {3, 2}), [](const In& x) { return ops::sub(x[0], x[1]); }},
      {"mul", two({2, 3}, {2, 3}), [](const In& x) { return ops::mul(x[0], x[1]); }},
      {"mul_broadcast", two({}, {2, 3}), [](const In& x) { return ops::mul(x[0], x[1]); }},
      {"div", two({2, 3}, {2, 3}, 0.5, 2.0), [](const In& x) { return ops::div(x[0], x[1]); }},
      {"add_scalar", mat(2, 2), [](const In& x) { return ops::add_scalar(x[0], 0.7); }},
      {"mul_scalar", mat(2, 2), [](const In& x) { return ops::mul_scalar(x[0], -1.3); }},
      {"rsub_scalar", mat(2, 2), [](const In& x) { return ops::rsub_scalar(1.0, x[0]); }},
      {"neg", mat(2, 3), [](const In& x) { return ops::neg(x[0]); }},
      {"relu", mat(3, 3), [](const In& x) { return ops::relu(x[0]); }},
      {"sigmoid", mat(3, 3, -4.0, 4.0), [](const In& x) { return ops::sigmoid(x[0]); }},
      {"log", mat(3, 2, 0.2, 3.0), [](const In& x) { return ops::log(x[0]); }},
      {"exp", mat(3, 2), [](const In& x) { return ops::exp(x[0]); }},
      {"sqrt", mat(3, 2, 0.2, 3.0), [](const In& x) { return ops::sqrt(x[0]); }},
      {"clamp", mat(3, 3, -2.0, 2.0), [](const In& x) { return ops::clamp(x[0], -1.0, 1.0); }},
      {"sum", mat(3, 4), [](const In& x) { return ops::sum(x[0]); }},
      {"sum_axis0", mat(3, 4), [](const In& x) { return ops::sum(x[0], 0); }},
      {"sum_axis1", mat(3, 4), [](const In& x) { return ops::sum(x[0], 1); }},
      {"mean", mat(3, 4), [](const In& x) { return ops::mean(x[0]); }},
      {"mean_axis1", mat(3, 4), [](const In& x) { return ops::mean(x[0], 1); }},
      {"max", mat(3, 4), [](const In& x) { return ops::max(x[0]); }},
      {"max_axis0", mat(4, 3), [](const In& x) { return ops::max(x[0], 0); }},
      {"max_axis1", mat(4, 3), [](const In& x) { return ops::max(x[0], 1); }},
      {"reshape", mat(2, 3), [](const In& x) { return ops::reshape(x[0], {3, 2}); }},
      {"add_bias", two({4, 3}, {3}), [](const In& x) { return ops::add_bias(x[0], x[1]); }},
      {"concat_cols", two({3, 2}, {3, 4}), [](const In& x) { return ops::concat_cols(x[0], x[1]); }},
      {"gather_rows", mat(4, 3), [](const In& x) { return ops::gather_rows(x[0], rows_index); }},
      {"scatter_add_rows", mat(5, 2), [](const In& x) { return ops::scatter_add_rows(x[0], rows_index, 4); }},
      {"scale_rows", two({4, 3}, {4}), [](const In& x) { return ops::scale_rows(x[0], x[1]); }},
      {"scale_cols", two({4, 3}, {3}), [](const In& x) { return ops::scale_cols(x[0], x[1]); }},
      {"segment_max", mat(6, 3), [](const In& x) { return ops::segment_max(x[0], segments, 3); }},
      {"log_softmax_rows", mat(4, 3, -3.0, 3.0), [](const In& x) { return ops::log_softmax_rows(x[0]); }},
      {"pick", mat(4, 3), [](const In& x) { return ops::pick(x[0], classes); }},
      {"cross_entropy", mat(4, 3, -3.0, 3.0), [](const In& x) { return ops::cross_entropy(x[0], classes); }},
  };
}

}  // namespace gnnx::testing
