#include "normclash/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "normclash/error.hpp"
#include "normclash/gemm.hpp"

namespace normclash {
namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

bool GradientMap::contains(Var v) const noexcept {
  return std::find(keys_.begin(), keys_.end(), v.index) != keys_.end();
}

const Tensor& GradientMap::at(Var v) const {
  auto it = std::find(keys_.begin(), keys_.end(), v.index);
  if (it == keys_.end()) throw TapeError("gradient map: node has no gradient");
  return values_[static_cast<std::size_t>(it - keys_.begin())];
}

Tensor GradientMap::take(Var v) {
  auto it = std::find(keys_.begin(), keys_.end(), v.index);
  if (it == keys_.end()) throw TapeError("gradient map: node has no gradient");
  return std::move(values_[static_cast<std::size_t>(it - keys_.begin())]);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index >= nodes_.size()) throw TapeError("tape: variable does not belong to this tape");
  return nodes_[v.index];
}

const Tensor& Tape::value(Var v) const { return val(node(v)); }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::borrow(const Tensor& value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.requires_grad = requires_grad;
  n.borrowed = &value;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 2 || tb.rank() < 1 || tb.rank() > 2) shape_error("matmul", ta.shape(), tb.shape());
  const std::size_t m = ta.shape()[0];
  const std::size_t k = ta.shape()[1];
  const std::size_t n = tb.rank() == 2 ? tb.shape()[1] : 1;
  if (tb.shape()[0] != k) shape_error("matmul", ta.shape(), tb.shape());
  Node out;
  out.op = Op::MatMul;
  out.a = a;
  out.b = b;
  out.requires_grad = node(a).requires_grad || node(b).requires_grad;
  out.value = tb.rank() == 2 ? Tensor({m, n}) : Tensor({m});
  kernels::gemm(ta.data(), tb.data(), out.value.data(), m, k, n);
  return push(std::move(out));
}

Var Tape::add_bias(Var x, Var bias) {
  const Tensor& tx = value(x);
  const Tensor& tb = value(bias);
  if (tx.rank() != 2 || tb.rank() != 1 || tb.shape()[0] != tx.shape()[1]) {
    shape_error("add_bias", tx.shape(), tb.shape());
  }
  Node out;
  out.op = Op::AddBias;
  out.a = x;
  out.b = bias;
  out.requires_grad = node(x).requires_grad || node(bias).requires_grad;
  out.value = tx;
  for (std::size_t i = 0; i < tx.rows(); ++i) add_into(out.value.row(i), tb.data());
  return push(std::move(out));
}

Var Tape::relu(Var x) {
  Node out;
  out.op = Op::Relu;
  out.a = x;
  out.requires_grad = node(x).requires_grad;
  out.value = value(x);
  for (double& v : out.value.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out));
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.shape() != tb.shape()) shape_error("add", ta.shape(), tb.shape());
  Node out;
  out.op = Op::Add;
  out.a = a;
  out.b = b;
  out.requires_grad = node(a).requires_grad || node(b).requires_grad;
  out.value = ta;
  add_into(out.value.data(), tb.data());
  return push(std::move(out));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.shape() != tb.shape()) shape_error("mul", ta.shape(), tb.shape());
  Node out;
  out.op = Op::Mul;
  out.a = a;
  out.b = b;
  out.requires_grad = node(a).requires_grad || node(b).requires_grad;
  out.value = ta;
  auto d = out.value.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= tb[i];
  return push(std::move(out));
}

Var Tape::scale(Var a, double factor) {
  Node out;
  out.op = Op::Scale;
  out.a = a;
  out.p0 = factor;
  out.requires_grad = node(a).requires_grad;
  out.value = value(a);
  for (double& v : out.value.data()) v *= factor;
  return push(std::move(out));
}

Var Tape::clamp(Var a, double lo, double hi) {
  Node out;
  out.op = Op::Clamp;
  out.a = a;
  out.p0 = lo;
  out.p1 = hi;
  out.requires_grad = node(a).requires_grad;
  out.value = value(a);
  for (double& v : out.value.data()) v = std::clamp(v, lo, hi);
  return push(std::move(out));
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).data()) s += v;
  Node out;
  out.op = Op::Sum;
  out.a = a;
  out.requires_grad = node(a).requires_grad;
  out.value = Tensor::scalar(s);
  return push(std::move(out));
}

Var Tape::mean(Var a) {
  const Tensor& ta = value(a);
  double s = 0.0;
  for (double v : ta.data()) s += v;
  Node out;
  out.op = Op::Mean;
  out.a = a;
  out.requires_grad = node(a).requires_grad;
  out.value = Tensor::scalar(s / static_cast<double>(ta.size()));
  return push(std::move(out));
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = value(logits);
  if (z.rank() != 2 || labels.size() != z.rows()) {
    shape_error("softmax_cross_entropy", z.shape(), Shape{labels.size()});
  }
  const std::size_t m = z.rows();
  const std::size_t k = z.cols();
  Node out;
  out.op = Op::SoftmaxXent;
  out.a = logits;
  out.requires_grad = node(logits).requires_grad;
  out.labels.assign(labels.begin(), labels.end());
  out.aux = Tensor({m, k});
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw ShapeError("softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    auto zr = z.row(i);
    auto pr = out.aux.row(i);
    const double zmax = *std::max_element(zr.begin(), zr.end());
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      pr[j] = std::exp(zr[j] - zmax);
      denom += pr[j];
    }
    for (std::size_t j = 0; j < k; ++j) pr[j] /= denom;
    total += std::log(denom) - (zr[static_cast<std::size_t>(y)] - zmax);
  }
  out.value = Tensor::scalar(total / static_cast<double>(m));
  return push(std::move(out));
}

Var Tape::logit_margin(Var logits, std::span<const int> labels, std::span<const double> weights,
                       double kappa) {
  const Tensor& z = value(logits);
  if (z.rank() != 2 || labels.size() != z.rows() || weights.size() != z.rows() || z.cols() < 2) {
    shape_error("logit_margin", z.shape(), Shape{labels.size()});
  }
  const std::size_t m = z.rows();
  const std::size_t k = z.cols();
  Node out;
  out.op = Op::LogitMargin;
  out.a = logits;
  out.requires_grad = node(logits).requires_grad;
  out.labels.assign(labels.begin(), labels.end());
  // aux row i: [weight, runner-up class or -1 when the clamp is active]
  out.aux = Tensor({m, 2});
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || y >= k) {
      throw ShapeError("logit_margin: label " + std::to_string(labels[i]) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    auto zr = z.row(i);
    std::size_t best = y == 0 ? 1 : 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != y && zr[j] > zr[best]) best = j;
    }
    const double margin = zr[y] - zr[best];
    const bool active = margin > -kappa;
    out.aux(i, 0) = weights[i];
    out.aux(i, 1) = active ? static_cast<double>(best) : -1.0;
    total += weights[i] * (active ? margin : -kappa);
  }
  out.value = Tensor::scalar(total);
  return push(std::move(out));
}

void Tape::accumulate(std::vector<Tensor>& adj, Var v, Tensor&& g) const {
  if (!nodes_[v.index].requires_grad) return;
  Tensor& slot = adj[v.index];
  if (slot.empty()) {
    slot = std::move(g);
  } else {
    add_into(slot.data(), g.data());
  }
}

GradientMap Tape::backward(Var output) {
  if (consumed_) throw TapeError("backward: tape already consumed");
  const Node& out_node = node(output);
  if (val(out_node).size() != 1) {
    throw TapeError("backward: output must be scalar, got shape " + to_string(val(out_node).shape()));
  }
  consumed_ = true;

  std::vector<Tensor> adj(nodes_.size());
  if (out_node.requires_grad) adj[output.index] = Tensor(val(out_node).shape(), 1.0);

  for (std::size_t idx = output.index + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.requires_grad || adj[idx].empty() || n.op == Op::Leaf) continue;
    const Tensor& g = adj[idx];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const Tensor& ta = value(n.a);
        const Tensor& tb = value(n.b);
        const std::size_t m = ta.shape()[0];
        const std::size_t k = ta.shape()[1];
        const std::size_t cols = tb.rank() == 2 ? tb.shape()[1] : 1;
        if (nodes_[n.a.index].requires_grad) {
          std::vector<double> bt(k * cols);
          kernels::transpose(tb.data(), bt, k, cols);
          Tensor da(ta.shape());
          kernels::gemm(g.data(), bt, da.data(), m, cols, k);
          accumulate(adj, n.a, std::move(da));
        }
        if (nodes_[n.b.index].requires_grad) {
          std::vector<double> at(m * k);
          kernels::transpose(ta.data(), at, m, k);
          Tensor db(tb.shape());
          kernels::gemm(at, g.data(), db.data(), k, m, cols);
          accumulate(adj, n.b, std::move(db));
        }
        break;
      }
      case Op::AddBias: {
        if (nodes_[n.b.index].requires_grad) {
          Tensor db(value(n.b).shape());
          for (std::size_t i = 0; i < g.rows(); ++i) add_into(db.data(), g.row(i));
          accumulate(adj, n.b, std::move(db));
        }
        if (nodes_[n.a.index].requires_grad) accumulate(adj, n.a, Tensor(g));
        break;
      }
      case Op::Relu: {
        const Tensor& x = value(n.a);
        Tensor dx = g;
        auto d = dx.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (!(x[i] > 0.0)) d[i] = 0.0;
        }
        accumulate(adj, n.a, std::move(dx));
        break;
      }
      case Op::Add:
        if (nodes_[n.a.index].requires_grad) accumulate(adj, n.a, Tensor(g));
        if (nodes_[n.b.index].requires_grad) accumulate(adj, n.b, Tensor(g));
        break;
      case Op::Mul: {
        const Tensor& ta = value(n.a);
        const Tensor& tb = value(n.b);
        if (nodes_[n.a.index].requires_grad) {
          Tensor da = g;
          auto d = da.data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= tb[i];
          accumulate(adj, n.a, std::move(da));
        }
        if (nodes_[n.b.index].requires_grad) {
          Tensor db = g;
          auto d = db.data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= ta[i];
          accumulate(adj, n.b, std::move(db));
        }
        break;
      }
      case Op::Scale: {
        Tensor da = g;
        for (double& v : da.data()) v *= n.p0;
        accumulate(adj, n.a, std::move(da));
        break;
      }
      case Op::Clamp: {
        const Tensor& x = value(n.a);
        Tensor dx = g;
        auto d = dx.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (x[i] < n.p0 || x[i] > n.p1) d[i] = 0.0;
        }
        accumulate(adj, n.a, std::move(dx));
        break;
      }
      case Op::Sum:
        accumulate(adj, n.a, Tensor(value(n.a).shape(), g[0]));
        break;
      case Op::Mean: {
        const Tensor& x = value(n.a);
        accumulate(adj, n.a, Tensor(x.shape(), g[0] / static_cast<double>(x.size())));
        break;
      }
      case Op::SoftmaxXent: {
        Tensor dz = n.aux;
        const double s = g[0] / static_cast<double>(dz.rows());
        for (std::size_t i = 0; i < dz.rows(); ++i) {
          auto r = dz.row(i);
          r[static_cast<std::size_t>(n.labels[i])] -= 1.0;
          for (double& v : r) v *= s;
        }
        accumulate(adj, n.a, std::move(dz));
        break;
      }
      case Op::LogitMargin: {
        const Tensor& z = value(n.a);
        Tensor dz(z.shape());
        for (std::size_t i = 0; i < z.rows(); ++i) {
          const double runner = n.aux(i, 1);
          if (runner < 0.0) continue;
          const double w = n.aux(i, 0) * g[0];
          dz(i, static_cast<std::size_t>(n.labels[i])) += w;
          dz(i, static_cast<std::size_t>(runner)) -= w;
        }
        accumulate(adj, n.a, std::move(dz));
        break;
      }
    }
  }

  GradientMap grads;
  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    const Node& n = nodes_[idx];
    if (n.op != Op::Leaf || !n.requires_grad) continue;
    grads.keys_.push_back(idx);
    grads.values_.push_back(adj[idx].empty() ? Tensor(val(n).shape()) : std::move(adj[idx]));
  }
  return grads;
}

}  // namespace normclash
