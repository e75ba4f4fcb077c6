#include "gnnx/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "gnnx/error.hpp"

namespace gnnx::ops {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

Tensor finish(const char* op, Shape shape, std::vector<double> data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericalError(std::string(op) + ": non-finite result");
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor record(Tape* tape, Tensor out, std::vector<NodeId> inputs, Tape::BackwardFn fn) {
  if (!tape) return out;
  return tape->record(std::move(out), std::move(inputs), std::move(fn));
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(x.shape()));
  }
}

enum class Broadcast { kEqual, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kEqual;
  if (b.numel() == 1) return Broadcast::kRightScalar;
  if (a.numel() == 1) return Broadcast::kLeftScalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()));
}

// Shared driver for binary elementwise ops. `fwd(x, y)` computes the value,
// `dx(x, y, out)` / `dy(x, y, out)` the partial derivatives.
template <typename F, typename DX, typename DY>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F fwd, DX dx, DY dy) {
  const Broadcast kind = broadcast_kind(a, b, op);
  const Shape shape = kind == Broadcast::kLeftScalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  const auto av = a.shared_data();
  const auto bv = b.shared_data();
  const std::size_t sa = kind == Broadcast::kLeftScalar ? 0 : 1;
  const std::size_t sb = kind == Broadcast::kRightScalar ? 0 : 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd((*av)[i * sa], (*bv)[i * sb]);
  Tensor result = finish(op, shape, std::move(out));
  Tape* tape = common_tape({&a, &b});
  if (!tape) return result;
  const auto ov = result.shared_data();
  return tape->record(result, {a.node(), b.node()},
                      [av, bv, ov, sa, sb, n, dx, dy, ia = a.node(), ib = b.node()](
                          std::span<const double> g, GradAccumulator& grads) {
                        auto ga = grads(ia);
                        auto gb = grads(ib);
                        for (std::size_t i = 0; i < n; ++i) {
                          const double x = (*av)[i * sa];
                          const double y = (*bv)[i * sb];
                          if (!ga.empty()) ga[i * sa] += g[i] * dx(x, y, (*ov)[i]);
                          if (!gb.empty()) gb[i * sb] += g[i] * dy(x, y, (*ov)[i]);
                        }
                      });
}

// Shared driver for unary elementwise ops; `df(x, out)` is the derivative.
template <typename F, typename DF>
Tensor unary(const char* op, const Tensor& x, F fwd, DF df) {
  const auto xv = x.shared_data();
  const std::size_t n = x.numel();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd((*xv)[i]);
  Tensor result = finish(op, x.shape(), std::move(out));
  if (!x.requires_grad()) return result;
  const auto ov = result.shared_data();
  return x.tape()->record(result, {x.node()},
                          [xv, ov, n, df, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * df((*xv)[i], (*ov)[i]);
                          });
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
  Shape reduced;
};

AxisSplit split_axis(const Tensor& x, std::optional<std::size_t> axis, const char* op) {
  AxisSplit s;
  if (!axis) {
    s.extent = x.numel();
    return s;
  }
  if (*axis >= x.rank()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(*axis) + " out of range for " +
                         shape_string(x.shape()));
  }
  for (std::size_t i = 0; i < x.rank(); ++i) {
    if (i < *axis) s.outer *= x.shape()[i];
    if (i > *axis) s.inner *= x.shape()[i];
    if (i != *axis) s.reduced.push_back(x.shape()[i]);
  }
  s.extent = x.shape()[*axis];
  return s;
}

void check_index(std::span<const std::size_t> index, std::size_t bound, const char* op) {
  for (std::size_t i : index) {
    if (i >= bound) {
      throw DimensionError(std::string(op) + ": index " + std::to_string(i) + " out of range " +
                           std::to_string(bound));
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const auto av = a.shared_data();
  const auto bv = b.shared_data();
  std::vector<double> out(m * n, 0.0);
  if (m && n && k) {
    MutMap(out.data(), m, n).noalias() = ConstMap(av->data(), m, k) * ConstMap(bv->data(), k, n);
  }
  Tensor result = finish("matmul", {m, n}, std::move(out));
  return record(common_tape({&a, &b}), result, {a.node(), b.node()},
                [av, bv, m, k, n, ia = a.node(), ib = b.node()](std::span<const double> g,
                                                               GradAccumulator& grads) {
                  if (!m || !n || !k) return;
                  ConstMap gm(g.data(), m, n);
                  if (auto ga = grads(ia); !ga.empty()) {
                    MutMap(ga.data(), m, k).noalias() += gm * ConstMap(bv->data(), k, n).transpose();
                  }
                  if (auto gb = grads(ib); !gb.empty()) {
                    MutMap(gb.data(), k, n).noalias() += ConstMap(av->data(), m, k).transpose() * gm;
                  }
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double v : b.data()) {
    if (v == 0.0) throw DomainError("div: division by zero");
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor add_scalar(const Tensor& x, double c) { return add(x, Tensor::scalar(c)); }
Tensor mul_scalar(const Tensor& x, double c) { return mul(x, Tensor::scalar(c)); }
Tensor rsub_scalar(double c, const Tensor& x) { return sub(Tensor::scalar(c), x); }

Tensor neg(const Tensor& x) {
  return unary(
      "neg", x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double out) { return out * (1.0 - out); });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive argument " + std::to_string(v));
  }
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double out) { return out; });
}

Tensor sqrt(const Tensor& x) {
  for (double v : x.data()) {
    if (v < 0.0) throw DomainError("sqrt: negative argument " + std::to_string(v));
  }
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double out) { return out > 0.0 ? 0.5 / out : 0.0; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw DomainError("clamp: lo > hi");
  return unary(
      "clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x, std::optional<std::size_t> axis) {
  const AxisSplit s = split_axis(x, axis, "sum");
  if (s.extent == 0) throw DomainError("sum: empty reduction axis");
  const auto xv = x.shared_data();
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t e = 0; e < s.extent; ++e) {
      const double* row = xv->data() + (o * s.extent + e) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += row[i];
    }
  }
  Tensor result = finish("sum", s.reduced, std::move(out));
  if (!x.requires_grad()) return result;
  return x.tape()->record(result, {x.node()},
                          [s, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t o = 0; o < s.outer; ++o) {
                              for (std::size_t e = 0; e < s.extent; ++e) {
                                double* dst = gx.data() + (o * s.extent + e) * s.inner;
                                for (std::size_t i = 0; i < s.inner; ++i) dst[i] += g[o * s.inner + i];
                              }
                            }
                          });
}

Tensor mean(const Tensor& x, std::optional<std::size_t> axis) {
  const AxisSplit s = split_axis(x, axis, "mean");
  if (s.extent == 0) throw DomainError("mean: empty reduction axis");
  return mul_scalar(sum(x, axis), 1.0 / static_cast<double>(s.extent));
}

Tensor max(const Tensor& x, std::optional<std::size_t> axis) {
  const AxisSplit s = split_axis(x, axis, "max");
  if (s.extent == 0) throw DomainError("max: empty reduction axis");
  const auto xv = x.shared_data();
  std::vector<double> out(s.outer * s.inner);
  std::vector<std::size_t> argmax(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      std::size_t best = o * s.extent * s.inner + i;
      for (std::size_t e = 1; e < s.extent; ++e) {
        const std::size_t at = (o * s.extent + e) * s.inner + i;
        if ((*xv)[at] > (*xv)[best]) best = at;
      }
      out[o * s.inner + i] = (*xv)[best];
      argmax[o * s.inner + i] = best;
    }
  }
  Tensor result = finish("max", s.reduced, std::move(out));
  if (!x.requires_grad()) return result;
  return x.tape()->record(result, {x.node()},
                          [argmax = std::move(argmax), ix = x.node()](std::span<const double> g,
                                                                     GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t j = 0; j < argmax.size(); ++j) gx[argmax[j]] += g[j];
                          });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  Tensor result(shape, x.values());
  if (!x.requires_grad()) return result;
  const std::size_t n = x.numel();
  return x.tape()->record(result, {x.node()}, [n, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
    auto gx = grads(ix);
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_bias");
  const std::size_t m = x.rows(), d = x.cols();
  if (bias.numel() != d) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " vs rows of width " + std::to_string(d));
  }
  const auto xv = x.shared_data();
  const auto bv = bias.shared_data();
  std::vector<double> out(m * d);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = (*xv)[r * d + c] + (*bv)[c];
  }
  Tensor result = finish("add_bias", x.shape(), std::move(out));
  return record(common_tape({&x, &bias}), result, {x.node(), bias.node()},
                [m, d, ix = x.node(), ib = bias.node()](std::span<const double> g, GradAccumulator& grads) {
                  if (auto gx = grads(ix); !gx.empty()) {
                    for (std::size_t i = 0; i < m * d; ++i) gx[i] += g[i];
                  }
                  if (auto gb = grads(ib); !gb.empty()) {
                    for (std::size_t r = 0; r < m; ++r) {
                      for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
                    }
                  }
                });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row counts differ: " + shape_string(a.shape()) + " | " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
  std::vector<double> out(m * (p + q));
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(r * p), p, out.begin() + static_cast<std::ptrdiff_t>(r * (p + q)));
    std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(r * q), q,
                out.begin() + static_cast<std::ptrdiff_t>(r * (p + q) + p));
  }
  Tensor result = finish("concat_cols", {m, p + q}, std::move(out));
  return record(common_tape({&a, &b}), result, {a.node(), b.node()},
                [m, p, q, ia = a.node(), ib = b.node()](std::span<const double> g, GradAccumulator& grads) {
                  auto ga = grads(ia);
                  auto gb = grads(ib);
                  for (std::size_t r = 0; r < m; ++r) {
                    if (!ga.empty()) {
                      for (std::size_t c = 0; c < p; ++c) ga[r * p + c] += g[r * (p + q) + c];
                    }
                    if (!gb.empty()) {
                      for (std::size_t c = 0; c < q; ++c) gb[r * q + c] += g[r * (p + q) + p + c];
                    }
                  }
                });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  require_rank(x, 2, "gather_rows");
  const std::size_t n = x.rows(), d = x.cols();
  check_index(index, n, "gather_rows");
  std::vector<double> out(index.size() * d);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(index[i] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  Tensor result(Shape{index.size(), d}, std::move(out));
  if (!x.requires_grad()) return result;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape()->record(result, {x.node()},
                          [idx = std::move(idx), d, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              double* dst = gx.data() + idx[i] * d;
                              const double* src = g.data() + i * d;
                              for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                            }
                          });
}

Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t num_rows) {
  require_rank(x, 2, "scatter_add_rows");
  if (index.size() != x.rows()) throw DimensionError("scatter_add_rows: index length differs from row count");
  check_index(index, num_rows, "scatter_add_rows");
  const std::size_t d = x.cols();
  std::vector<double> out(num_rows * d, 0.0);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < index.size(); ++i) {
    double* dst = out.data() + index[i] * d;
    const double* src = xv.data() + i * d;
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
  Tensor result = finish("scatter_add_rows", {num_rows, d}, std::move(out));
  if (!x.requires_grad()) return result;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape()->record(result, {x.node()},
                          [idx = std::move(idx), d, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              const double* src = g.data() + idx[i] * d;
                              double* dst = gx.data() + i * d;
                              for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                            }
                          });
}

Tensor scale_rows(const Tensor& x, const Tensor& w) {
  require_rank(x, 2, "scale_rows");
  const std::size_t m = x.rows(), d = x.cols();
  if (w.numel() != m) throw DimensionError("scale_rows: weight count differs from row count");
  const auto xv = x.shared_data();
  const auto wv = w.shared_data();
  std::vector<double> out(m * d);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = (*xv)[r * d + c] * (*wv)[r];
  }
  Tensor result = finish("scale_rows", x.shape(), std::move(out));
  return record(common_tape({&x, &w}), result, {x.node(), w.node()},
                [xv, wv, m, d, ix = x.node(), iw = w.node()](std::span<const double> g, GradAccumulator& grads) {
                  auto gx = grads(ix);
                  auto gw = grads(iw);
                  for (std::size_t r = 0; r < m; ++r) {
                    for (std::size_t c = 0; c < d; ++c) {
                      if (!gx.empty()) gx[r * d + c] += g[r * d + c] * (*wv)[r];
                      if (!gw.empty()) gw[r] += g[r * d + c] * (*xv)[r * d + c];
                    }
                  }
                });
}

Tensor scale_cols(const Tensor& x, const Tensor& s) {
  require_rank(x, 2, "scale_cols");
  const std::size_t m = x.rows(), d = x.cols();
  if (s.numel() != d) throw DimensionError("scale_cols: scale count differs from column count");
  const auto xv = x.shared_data();
  const auto sv = s.shared_data();
  std::vector<double> out(m * d);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = (*xv)[r * d + c] * (*sv)[c];
  }
  Tensor result = finish("scale_cols", x.shape(), std::move(out));
  return record(common_tape({&x, &s}), result, {x.node(), s.node()},
                [xv, sv, m, d, ix = x.node(), is = s.node()](std::span<const double> g, GradAccumulator& grads) {
                  auto gx = grads(ix);
                  auto gs = grads(is);
                  for (std::size_t r = 0; r < m; ++r) {
                    for (std::size_t c = 0; c < d; ++c) {
                      if (!gx.empty()) gx[r * d + c] += g[r * d + c] * (*sv)[c];
                      if (!gs.empty()) gs[c] += g[r * d + c] * (*xv)[r * d + c];
                    }
                  }
                });
}

Tensor segment_max(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments) {
  require_rank(x, 2, "segment_max");
  const std::size_t n = x.rows(), d = x.cols();
  if (segment.size() != n) throw DimensionError("segment_max: segment ids differ from row count");
  check_index(segment, num_segments, "segment_max");
  const auto& xv = x.values();
  std::vector<double> out(num_segments * d, 0.0);
  std::vector<std::size_t> argmax(num_segments * d, n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t s = segment[r];
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t slot = s * d + c;
      if (argmax[slot] == n || xv[r * d + c] > out[slot]) {
        out[slot] = xv[r * d + c];
        argmax[slot] = r;
      }
    }
  }
  for (std::size_t slot = 0; slot < argmax.size(); ++slot) {
    if (argmax[slot] == n) throw DomainError("segment_max: empty segment " + std::to_string(slot / std::max<std::size_t>(d, 1)));
  }
  Tensor result = finish("segment_max", {num_segments, d}, std::move(out));
  if (!x.requires_grad()) return result;
  return x.tape()->record(result, {x.node()},
                          [argmax = std::move(argmax), d, ix = x.node()](std::span<const double> g,
                                                                        GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t slot = 0; slot < argmax.size(); ++slot) {
                              gx[argmax[slot] * d + slot % d] += g[slot];
                            }
                          });
}

Tensor log_softmax_rows(const Tensor& x) {
  require_rank(x, 2, "log_softmax_rows");
  const std::size_t m = x.rows(), c = x.cols();
  if (c == 0) throw DomainError("log_softmax_rows: no columns");
  const auto& xv = x.values();
  std::vector<double> out(m * c);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.data() + r * c;
    const double top = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(row[j] - top);
    const double lse = top + std::log(total);
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = row[j] - lse;
  }
  Tensor result = finish("log_softmax_rows", x.shape(), std::move(out));
  if (!x.requires_grad()) return result;
  const auto ov = result.shared_data();
  return x.tape()->record(result, {x.node()},
                          [ov, m, c, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t r = 0; r < m; ++r) {
                              double gsum = 0.0;
                              for (std::size_t j = 0; j < c; ++j) gsum += g[r * c + j];
                              for (std::size_t j = 0; j < c; ++j) {
                                gx[r * c + j] += g[r * c + j] - std::exp((*ov)[r * c + j]) * gsum;
                              }
                            }
                          });
}

Tensor pick(const Tensor& x, std::span<const std::size_t> index) {
  require_rank(x, 2, "pick");
  const std::size_t m = x.rows(), c = x.cols();
  if (index.size() != m) throw DimensionError("pick: one index per row required");
  check_index(index, c, "pick");
  std::vector<double> out(m);
  for (std::size_t r = 0; r < m; ++r) out[r] = x.values()[r * c + index[r]];
  Tensor result(Shape{m}, std::move(out));
  if (!x.requires_grad()) return result;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape()->record(result, {x.node()},
                          [idx = std::move(idx), c, ix = x.node()](std::span<const double> g, GradAccumulator& grads) {
                            auto gx = grads(ix);
                            for (std::size_t r = 0; r < idx.size(); ++r) gx[r * c + idx[r]] += g[r];
                          });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  if (targets.empty()) throw DomainError("cross_entropy: no targets");
  return neg(mean(pick(log_softmax_rows(logits), targets)));
}

Tensor straight_through(const Tensor& hard, const Tensor& soft) {
  if (hard.shape() != soft.shape()) throw DimensionError("straight_through: shapes differ");
  // Value of hard exactly (no hard - soft + soft rounding), identity adjoint
  // into soft.
  Tensor result = finish("straight_through", hard.shape(), hard.values());
  if (!soft.requires_grad()) return result;
  const std::size_t n = soft.numel();
  return soft.tape()->record(result, {soft.node()}, [n, is = soft.node()](std::span<const double> g, GradAccumulator& grads) {
    auto gs = grads(is);
    for (std::size_t i = 0; i < n; ++i) gs[i] += g[i];
  });
}

}  // namespace gnnx::ops
