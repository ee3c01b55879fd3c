#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace wdsel::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. `grad` stays empty until a backward pass
/// (or sgd_step) touches it; when present it matches `values` in size.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  std::size_t size() const { return values.size(); }
  bool has_grad() const { return !grad.empty(); }
  void zero_grad() { grad.assign(values.size(), 0.0); }
  void clear_grad() { grad.clear(); }
  double item() const;
};

/// Handle to a node of a Graph.
struct Var {
  std::size_t id = 0;
};

/// Append-only tape. Nodes are recorded in evaluation order and backward walks
/// them once in reverse. Parameters enter through param(); their gradients are
/// accumulated into the bound Tensor::grad.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var param(Tensor& tensor);
  Var constant(Tensor tensor);
  Var constant(Shape shape, std::vector<double> values);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// Elementwise product; either operand may be a single-element tensor.
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var reshape(Var a, Shape shape);
  /// x: [channels_in, length], kernel: [channels_out, channels_in, k].
  Var conv1d(Var x, Var kernel, std::size_t stride, std::size_t padding);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var sqrt(Var a);
  Var log2(Var a);
  Var reciprocal(Var a);
  Var mean(Var a);
  Var sum(Var a);
  Var l1_norm(Var a);
  Var inner_product(Var a, Var b);
  /// Identity forward; backward multiplies the incoming gradient by mask.
  Var stop_gradient_mask(Var a, const std::vector<std::uint8_t>& mask);

  const Tensor& value(Var v) const;
  double item(Var v) const;
  /// Node gradient after backward(); zeros for nodes that did not receive one.
  std::vector<double> grad(Var v) const;

  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::string tag;
    Tensor value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    Tensor* bound = nullptr;
    bool needs_grad = false;
    std::function<void(Graph&, std::size_t)> backward;
  };

  Var push(std::string tag, Tensor value, std::vector<std::size_t> inputs,
           std::function<void(Graph&, std::size_t)> backward);
  Node& node(Var v);
  const Node& node(Var v) const;
  std::vector<double>& grad_buffer(std::size_t id);

  std::vector<Node> nodes_;
  std::vector<std::pair<const Tensor*, std::size_t>> bound_;
  bool backward_done_ = false;
};

/// p <- p - lr * grad, then clears grads.
void sgd_step(std::span<Tensor* const> params, double learning_rate);

/// SGD with classical momentum. Velocity buffers are keyed by parameter order.
class MomentumSgd {
 public:
  MomentumSgd(double learning_rate, double momentum);
  void step(std::span<Tensor* const> params);

 private:
  double learning_rate_;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace wdsel::ad
