#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "normclash/tensor.hpp"

namespace normclash {

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it.
struct Var {
  std::size_t index = 0;
  friend bool operator==(Var, Var) = default;
};

class GradientMap {
 public:
  bool contains(Var v) const noexcept;
  const Tensor& at(Var v) const;
  Tensor take(Var v);

 private:
  friend class Tape;
  std::vector<std::size_t> keys_;
  std::vector<Tensor> values_;
};

// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so the
// record is topologically sorted by construction. Each primitive validates
// shapes eagerly and throws ShapeError naming itself.
//
// A tape supports exactly one backward() call.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var leaf(Tensor value, bool requires_grad = false);
  // Non-owning leaf; `value` must outlive the tape. Used for model
  // parameters so that forward passes do not copy weight matrices.
  Var borrow(const Tensor& value, bool requires_grad = false);

  Var matmul(Var a, Var b);
  // x[b,n] + bias[n], broadcast over rows.
  Var add_bias(Var x, Var bias);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var clamp(Var a, double lo, double hi);
  Var sum(Var a);
  Var mean(Var a);
  // Mean over rows of -log softmax(logits)[label], evaluated with the
  // max-shifted log-sum-exp.
  Var softmax_cross_entropy(Var logits, std::span<const int> labels);
  // sum_i weight_i * max(Z_iy - max_{k!=y} Z_ik, -kappa): the logit-margin
  // surrogate used by the C&W attack.
  Var logit_margin(Var logits, std::span<const int> labels, std::span<const double> weights,
                   double kappa);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Propagates adjoints from a scalar output. Returns the adjoint of every
  // leaf created with requires_grad = true.
  GradientMap backward(Var output);

 private:
  enum class Op : std::uint8_t {
    Leaf, MatMul, AddBias, Relu, Add, Mul, Scale, Clamp, Sum, Mean, SoftmaxXent, LogitMargin
  };

  struct Node {
    Op op = Op::Leaf;
    Var a{};
    Var b{};
    bool requires_grad = false;
    Tensor value;
    const Tensor* borrowed = nullptr;
    // Op-specific payload: softmax probabilities, labels, margin weights,
    // active-class indices.
    Tensor aux;
    std::vector<int> labels;
    double p0 = 0.0;
    double p1 = 0.0;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  const Tensor& val(const Node& n) const { return n.borrowed ? *n.borrowed : n.value; }
  void accumulate(std::vector<Tensor>& adj, Var v, Tensor&& g) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace normclash
