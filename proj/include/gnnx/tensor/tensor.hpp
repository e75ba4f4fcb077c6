#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace gnnx {

using Shape = std::vector<std::size_t>;
using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

// Dense row-major tensor of doubles. Values are immutable and shared between
// copies; a tensor recorded on a tape additionally carries its node id.
// Rank-0 tensors (shape {}) hold a single value.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data_->size(); }
  // Rows/cols of a rank-2 tensor.
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }

  std::span<const double> data() const { return {data_->data(), data_->size()}; }
  const std::vector<double>& values() const { return *data_; }
  std::shared_ptr<const std::vector<double>> shared_data() const { return data_; }
  double item() const;
  double operator[](std::size_t flat) const { return (*data_)[flat]; }
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_ != kNoNode; }
  NodeId node() const { return node_; }
  Tape* tape() const { return tape_; }

  // Same values, detached from any tape.
  Tensor detach() const;

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  NodeId node_ = kNoNode;
};

// Lazily-allocated gradient buffers used during one backward pass.
class GradAccumulator {
 public:
  explicit GradAccumulator(std::vector<std::vector<double>>& buffers,
                           const std::vector<std::size_t>& sizes)
      : buffers_(buffers), sizes_(sizes) {}

  // Buffer of the given node, zero-initialized on first access; empty for
  // inputs that are not on the tape.
  std::span<double> operator()(NodeId id);

 private:
  std::vector<std::vector<double>>& buffers_;
  const std::vector<std::size_t>& sizes_;
};

// Result of a backward pass: gradient of the loss for every tape node reached.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<std::vector<double>> buffers, std::vector<Shape> shapes)
      : buffers_(std::move(buffers)), shapes_(std::move(shapes)) {}

  // Gradient for a tracked tensor; exactly zero when the loss does not
  // depend on it.
  Tensor of(const Tensor& tracked) const;
  bool reached(const Tensor& tracked) const;

 private:
  std::vector<std::vector<double>> buffers_;
  std::vector<Shape> shapes_;
};

// Ordered record of primitive operations. Inputs always precede the
// operations that consume them, so a reverse sweep is a valid topological
// order. A tape lives for one optimization step.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> grad_out, GradAccumulator& grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a leaf whose gradient is wanted.
  Tensor variable(const Tensor& value);

  // Records an operation. `inputs` holds the node id of each tensor argument
  // (kNoNode for constants); the backward function receives the output
  // gradient and accumulates into the inputs through `grads`.
  Tensor record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

  // Reverse sweep from a scalar loss. Does not modify the tape, so repeated
  // calls give bitwise-identical results.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<NodeId> inputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::vector<std::size_t> sizes_;
  std::vector<Shape> shapes_;
};

// Returns the tape shared by the tracked arguments, or nullptr when none is
// tracked. Mixing tensors from different tapes is a contract error.
Tape* common_tape(std::initializer_list<const Tensor*> args);

}  // namespace gnnx
