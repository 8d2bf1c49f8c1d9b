#pragma once

// Minimal tape-based reverse-mode differentiation over CHW float tensors.
//
// A Graph records nodes in creation order; backward() walks them in reverse.
// Each forward pass builds a fresh Graph, so graphs are single-use and not
// shared between threads.

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "efenet/kernels.hpp"
#include "efenet/tensor.hpp"

namespace efenet::ag {

/// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Shape s) : name(std::move(n)), value(s), grad(s) {}
  void zero_grad() { grad = Tensor(value.shape()); }
};

class Graph;

class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  /// Gradient after backward(); empty when nothing reached this node.
  const Tensor& grad() const;
  /// Double-precision value of scalar (loss) nodes.
  double scalar() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return graph_ != nullptr; }
  int id() const { return id_; }
  Graph* graph() const { return graph_; }

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf without gradient.
  Var constant(Tensor t);
  /// Leaf whose gradient is retained and readable through Var::grad().
  Var input(Tensor t);
  /// Leaf bound to a parameter; backward() adds its gradient into p.grad.
  Var param(Parameter& p);

  /// Registers an op result. `backward` reads grad(self) and accumulates into
  /// the parents through grad_mut().
  Var make(Tensor value, std::span<const Var> parents, BackwardFn backward, double scalar = 0.0);

  /// Seeds d(out)/d(out) = 1 for a scalar node, or `seed` for a tensor node.
  void backward(Var out);
  void backward(Var out, const Tensor& seed);

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  double scalar(int id) const { return nodes_[id].scalar; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Zero-initialized on first access.
  Tensor& grad_mut(int id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    double scalar = 0.0;
    bool requires_grad = false;
    BackwardFn backward;
  };
  Var add_node(Node n);

  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable ops. All operands must belong to the same graph.

Var conv2d(Var x, Var weight, Var bias, const kernels::ConvGeom& g);
Var conv_transpose2d(Var x, Var weight, Var bias, const kernels::ConvGeom& g);
Var leaky_relu(Var x, float slope);
Var concat(std::span<const Var> parts);
Var add(Var a, Var b);
Var scale(Var a, float s);
/// Backward bilinear warp (border clamp) of `source` by a 2-channel flow.
Var warp(Var source, Var flow);
/// 2x2 average pooling; spatial extent must be even.
Var avg_pool2(Var x);
Var crop(Var x, int h, int w);
/// sum_i weights[i] * terms[i] over scalar nodes.
Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);

}  // namespace efenet::ag
