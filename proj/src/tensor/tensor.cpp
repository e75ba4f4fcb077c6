#include "gnnx/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "gnnx/error.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace gnnx {
namespace {

#ifdef __GLIBC__
// Training allocates and frees many activation buffers of a few hundred KiB;
// with the default thresholds glibc maps and unmaps each one, which costs
// more than the arithmetic. Keep them on the heap instead.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
  return true;
}();
#endif

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  if (shape_numel(shape_) != data.size()) {
    throw DimensionError("Tensor: shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }
Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Tensor::matrix: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("Tensor::dim: axis " + std::to_string(axis) + " out of range for " +
                         shape_string(shape_));
  }
  return shape_[axis];
}

double Tensor::item() const {
  if (numel() != 1) throw ContractError("Tensor::item: tensor " + shape_string(shape_) + " is not a scalar");
  return (*data_)[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("Tensor::at: rank-2 tensor required");
  return (*data_)[row * shape_[1] + col];
}

Tensor Tensor::detach() const {
  Tensor out = *this;
  out.tape_ = nullptr;
  out.node_ = kNoNode;
  return out;
}

std::span<double> GradAccumulator::operator()(NodeId id) {
  if (id == kNoNode) return {};
  auto& buffer = buffers_[static_cast<std::size_t>(id)];
  if (buffer.empty() && sizes_[static_cast<std::size_t>(id)] > 0) {
    buffer.assign(sizes_[static_cast<std::size_t>(id)], 0.0);
  }
  return {buffer.data(), buffer.size()};
}

Tensor Gradients::of(const Tensor& tracked) const {
  if (!tracked.requires_grad()) throw ContractError("Gradients::of: tensor is not on the tape");
  const auto id = static_cast<std::size_t>(tracked.node());
  if (id >= buffers_.size()) throw ContractError("Gradients::of: tensor belongs to another tape");
  if (buffers_[id].empty()) return Tensor::zeros(shapes_[id]);
  return Tensor(shapes_[id], buffers_[id]);
}

bool Gradients::reached(const Tensor& tracked) const {
  if (!tracked.requires_grad()) return false;
  const auto id = static_cast<std::size_t>(tracked.node());
  return id < buffers_.size() && !buffers_[id].empty();
}

Tensor Tape::variable(const Tensor& value) {
  return record(value.detach(), {}, nullptr);
}

Tensor Tape::record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
  const auto id = static_cast<NodeId>(nodes_.size());
  for (NodeId input : inputs) {
    if (input >= id) throw ContractError("Tape::record: input recorded after its consumer");
  }
  nodes_.push_back(Node{std::move(inputs), std::move(backward)});
  sizes_.push_back(value.numel());
  shapes_.push_back(value.shape());
  value.tape_ = this;
  value.node_ = id;
  return value;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.numel() != 1) {
    throw ContractError("Tape::backward: loss must be scalar, got " + shape_string(loss.shape()));
  }
  if (loss.tape() != this || !loss.requires_grad()) {
    throw ContractError("Tape::backward: loss is not recorded on this tape");
  }
  std::vector<std::vector<double>> buffers(nodes_.size());
  GradAccumulator acc(buffers, sizes_);
  const auto root = static_cast<std::size_t>(loss.node());
  acc(loss.node())[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    if (buffers[i].empty() || !nodes_[i].backward) continue;
    const std::vector<double>& grad = buffers[i];
    nodes_[i].backward(std::span<const double>(grad.data(), grad.size()), acc);
  }
  return Gradients(std::move(buffers), shapes_);
}

Tape* common_tape(std::initializer_list<const Tensor*> args) {
  Tape* tape = nullptr;
  for (const Tensor* t : args) {
    if (!t->requires_grad()) continue;
    if (tape && tape != t->tape()) throw ContractError("operation mixes tensors from different tapes");
    tape = t->tape();
  }
  return tape;
}

}  // namespace gnnx
