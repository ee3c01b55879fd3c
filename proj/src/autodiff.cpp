#include "wdsel/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wdsel/error.hpp"

namespace wdsel::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v, bool rg)
    : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
  if (shape_size(shape) != values.size())
    fail(ErrorKind::structural, "tensor shape " + shape_string(shape) + " holds " +
                                    std::to_string(shape_size(shape)) + " values, got " +
                                    std::to_string(values.size()));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return Tensor({1}, {v}, requires_grad); }

double Tensor::item() const {
  if (values.size() != 1)
    fail(ErrorKind::usage, "item() on tensor of shape " + shape_string(shape));
  return values[0];
}

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    fail(ErrorKind::structural, std::string(op) + ": shape mismatch " + shape_string(a.shape) +
                                    " vs " + shape_string(b.shape));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.shape.size() != rank)
    fail(ErrorKind::structural, std::string(op) + ": expected rank " + std::to_string(rank) +
                                    ", got shape " + shape_string(t.shape));
}

void check_finite(const std::string& tag, const Tensor& t) {
  for (double v : t.values) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite value produced by " + tag);
  }
}

}  // namespace

Graph::Node& Graph::node(Var v) {
  if (v.id >= nodes_.size()) fail(ErrorKind::usage, "variable does not belong to this graph");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) fail(ErrorKind::usage, "variable does not belong to this graph");
  return nodes_[v.id];
}

std::vector<double>& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Var Graph::push(std::string tag, Tensor value, std::vector<std::size_t> inputs,
                std::function<void(Graph&, std::size_t)> backward) {
  if (backward_done_) fail(ErrorKind::usage, "graph is closed after backward()");
  check_finite(tag, value);
  Node n;
  n.tag = std::move(tag);
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  for (std::size_t in : n.inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::param(Tensor& tensor) {
  for (const auto& [ptr, id] : bound_) {
    if (ptr == &tensor) return Var{id};
  }
  Tensor copy(tensor.shape, tensor.values, tensor.requires_grad);
  Var v = push("param", std::move(copy), {}, nullptr);
  nodes_[v.id].bound = &tensor;
  nodes_[v.id].needs_grad = tensor.requires_grad;
  bound_.emplace_back(&tensor, v.id);
  return v;
}

Var Graph::constant(Tensor tensor) {
  tensor.requires_grad = false;
  return push("constant", std::move(tensor), {}, nullptr);
}

Var Graph::constant(Shape shape, std::vector<double> values) {
  return constant(Tensor(std::move(shape), std::move(values)));
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

double Graph::item(Var v) const { return node(v).value.item(); }

std::vector<double> Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return std::vector<double>(n.value.size(), 0.0);
  return n.grad;
}

Var Graph::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_same_shape("add", ta, tb);
  Tensor out(ta.shape, ta.values);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += tb.values[i];
  return push("add", std::move(out), {a.id, b.id}, [a, b](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    for (Var in : {a, b}) {
      if (!g.nodes_[in.id].needs_grad) continue;
      auto& gi = g.grad_buffer(in.id);
      for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
    }
  });
}

Var Graph::sub(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_same_shape("sub", ta, tb);
  Tensor out(ta.shape, ta.values);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= tb.values[i];
  return push("sub", std::move(out), {a.id, b.id}, [a, b](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    if (g.nodes_[a.id].needs_grad) {
      auto& ga = g.grad_buffer(a.id);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.nodes_[b.id].needs_grad) {
      auto& gb = g.grad_buffer(b.id);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.size() == 1 && tb.size() != 1) return mul(b, a);
  const bool broadcast = tb.size() == 1 && ta.size() != 1;
  if (!broadcast) require_same_shape("mul", ta, tb);
  Tensor out(ta.shape, ta.values);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= tb.values[broadcast ? 0 : i];
  return push("mul", std::move(out), {a.id, b.id},
              [a, b, broadcast](Graph& g, std::size_t self) {
                const auto& go = g.nodes_[self].grad;
                const auto& va = g.nodes_[a.id].value.values;
                const auto& vb = g.nodes_[b.id].value.values;
                if (g.nodes_[a.id].needs_grad) {
                  auto& ga = g.grad_buffer(a.id);
                  for (std::size_t i = 0; i < go.size(); ++i)
                    ga[i] += go[i] * vb[broadcast ? 0 : i];
                }
                if (g.nodes_[b.id].needs_grad) {
                  auto& gb = g.grad_buffer(b.id);
                  for (std::size_t i = 0; i < go.size(); ++i)
                    gb[broadcast ? 0 : i] += go[i] * va[i];
                }
              });
}

Var Graph::scale(Var a, double factor) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape, ta.values);
  for (double& v : out.values) v *= factor;
  return push("scale", std::move(out), {a.id}, [a, factor](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += factor * go[i];
  });
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_rank("matmul", ta, 2);
  require_rank("matmul", tb, 2);
  const std::size_t m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
  if (tb.shape[0] != k)
    fail(ErrorKind::structural, "matmul: shape mismatch " + shape_string(ta.shape) + " vs " +
                                    shape_string(tb.shape));
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.values.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta.values[i * k + p];
      if (av == 0.0) continue;
      const double* brow = tb.values.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return push("matmul", std::move(out), {a.id, b.id}, [a, b, m, k, n](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    const auto& va = g.nodes_[a.id].value.values;
    const auto& vb = g.nodes_[b.id].value.values;
    if (g.nodes_[a.id].needs_grad) {
      auto& ga = g.grad_buffer(a.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * vb[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (g.nodes_[b.id].needs_grad) {
      auto& gb = g.grad_buffer(b.id);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = va[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * go[i * n + j];
        }
    }
  });
}

Var Graph::transpose(Var a) {
  const Tensor& ta = value(a);
  require_rank("transpose", ta, 2);
  const std::size_t r = ta.shape[0], c = ta.shape[1];
  Tensor out = Tensor::zeros({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.values[j * r + i] = ta.values[i * c + j];
  return push("transpose", std::move(out), {a.id}, [a, r, c](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += go[j * r + i];
  });
}

Var Graph::reshape(Var a, Shape shape) {
  const Tensor& ta = value(a);
  if (shape_size(shape) != ta.size())
    fail(ErrorKind::structural,
         "reshape: cannot view " + shape_string(ta.shape) + " as " + shape_string(shape));
  Tensor out(std::move(shape), ta.values);
  return push("reshape", std::move(out), {a.id}, [a](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
  });
}

Var Graph::conv1d(Var x, Var kernel, std::size_t stride, std::size_t padding) {
  const Tensor& tx = value(x);
  const Tensor& tk = value(kernel);
  require_rank("conv1d input", tx, 2);
  require_rank("conv1d kernel", tk, 3);
  const std::size_t cin = tx.shape[0], len = tx.shape[1];
  const std::size_t cout = tk.shape[0], ksize = tk.shape[2];
  if (tk.shape[1] != cin)
    fail(ErrorKind::structural, "conv1d: input " + shape_string(tx.shape) +
                                    " does not match kernel " + shape_string(tk.shape));
  if (stride == 0) fail(ErrorKind::structural, "conv1d: stride must be positive");
  if (len + 2 * padding < ksize)
    fail(ErrorKind::structural, "conv1d: input " + shape_string(tx.shape) +
                                    " shorter than kernel " + shape_string(tk.shape));
  const std::size_t out_len = (len + 2 * padding - ksize) / stride + 1;

  // Output positions t whose tap kk lands inside the input.
  auto tap_range = [=](std::size_t kk) {
    const auto p = static_cast<std::ptrdiff_t>(padding);
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto k = static_cast<std::ptrdiff_t>(kk);
    std::ptrdiff_t lo = p - k > 0 ? (p - k + s - 1) / s : 0;
    std::ptrdiff_t hi = (static_cast<std::ptrdiff_t>(len) - 1 + p - k);
    hi = hi < 0 ? -1 : hi / s;
    hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out_len) - 1);
    return std::pair<std::ptrdiff_t, std::ptrdiff_t>{lo, hi};
  };

  Tensor out = Tensor::zeros({cout, out_len});
  for (std::size_t co = 0; co < cout; ++co) {
    double* orow = out.values.data() + co * out_len;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* xrow = tx.values.data() + ci * len;
      for (std::size_t kk = 0; kk < ksize; ++kk) {
        const double w = tk.values[(co * cin + ci) * ksize + kk];
        if (w == 0.0) continue;
        const auto [lo, hi] = tap_range(kk);
        const std::ptrdiff_t offset =
            static_cast<std::ptrdiff_t>(kk) - static_cast<std::ptrdiff_t>(padding);
        for (std::ptrdiff_t t = lo; t <= hi; ++t)
          orow[t] += w * xrow[t * static_cast<std::ptrdiff_t>(stride) + offset];
      }
    }
  }

  return push("conv1d", std::move(out), {x.id, kernel.id},
              [=](Graph& g, std::size_t self) {
                const auto& go = g.nodes_[self].grad;
                const auto& vx = g.nodes_[x.id].value.values;
                const auto& vk = g.nodes_[kernel.id].value.values;
                const bool need_x = g.nodes_[x.id].needs_grad;
                const bool need_k = g.nodes_[kernel.id].needs_grad;
                std::vector<double>* gx = need_x ? &g.grad_buffer(x.id) : nullptr;
                std::vector<double>* gk = need_k ? &g.grad_buffer(kernel.id) : nullptr;
                const auto s = static_cast<std::ptrdiff_t>(stride);
                for (std::size_t co = 0; co < cout; ++co) {
                  const double* grow = go.data() + co * out_len;
                  for (std::size_t ci = 0; ci < cin; ++ci) {
                    const double* xrow = vx.data() + ci * len;
                    for (std::size_t kk = 0; kk < ksize; ++kk) {
                      const std::size_t widx = (co * cin + ci) * ksize + kk;
                      const auto [lo, hi] = tap_range(kk);
                      const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(kk) -
                                                    static_cast<std::ptrdiff_t>(padding);
                      if (gk) {
                        double acc = 0.0;
                        for (std::ptrdiff_t t = lo; t <= hi; ++t)
                          acc += grow[t] * xrow[t * s + offset];
                        (*gk)[widx] += acc;
                      }
                      if (gx) {
                        const double w = vk[widx];
                        if (w == 0.0) continue;
                        double* gxrow = gx->data() + ci * len;
                        for (std::ptrdiff_t t = lo; t <= hi; ++t) gxrow[t * s + offset] += w * grow[t];
                      }
                    }
                  }
                }
              });
}

Var Graph::relu(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape, ta.values);
  for (double& v : out.values) v = v > 0.0 ? v : 0.0;
  return push("relu", std::move(out), {a.id}, [a](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    const auto& va = g.nodes_[a.id].value.values;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (va[i] > 0.0) ga[i] += go[i];
  });
}

Var Graph::sigmoid(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape, ta.values);
  for (double& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
  return push("sigmoid", std::move(out), {a.id}, [a](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    const auto& vo = g.nodes_[self].value.values;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * vo[i] * (1.0 - vo[i]);
  });
}

Var Graph::sqrt(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape, ta.values);
  for (double& v : out.values) {
    if (v < 0.0) fail(ErrorKind::numeric, "sqrt of negative value");
    v = std::sqrt(v);
  }
  return push("sqrt", std::move(out), {a.id}, [a](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    const auto& vo = g.nodes_[self].value.values;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * 0.5 / vo[i];
  });
}

Var Graph::log2(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape, ta.values);
  for (double& v : out.values) v = std::log2(v);
  return push("log2", std::move(out), {a.id}, [a](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    const auto& va = g.nodes_[a.id].value.values;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] / (va[i] * std::log(2.0));
  });
}

Var Graph::reciprocal(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape, ta.values);
  for (double& v : out.values) v = 1.0 / v;
  return push("reciprocal", std::move(out), {a.id}, [a](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    const auto& vo = g.nodes_[self].value.values;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] -= go[i] * vo[i] * vo[i];
  });
}

Var Graph::sum(Var a) {
  const Tensor& ta = value(a);
  const double s = std::accumulate(ta.values.begin(), ta.values.end(), 0.0);
  return push("sum", Tensor::scalar(s), {a.id}, [a](Graph& g, std::size_t self) {
    const double go = g.nodes_[self].grad[0];
    auto& ga = g.grad_buffer(a.id);
    for (double& v : ga) v += go;
  });
}

Var Graph::mean(Var a) {
  const Tensor& ta = value(a);
  const double n = static_cast<double>(ta.size());
  const double s = std::accumulate(ta.values.begin(), ta.values.end(), 0.0) / n;
  return push("mean", Tensor::scalar(s), {a.id}, [a, n](Graph& g, std::size_t self) {
    const double go = g.nodes_[self].grad[0] / n;
    auto& ga = g.grad_buffer(a.id);
    for (double& v : ga) v += go;
  });
}

Var Graph::l1_norm(Var a) {
  const Tensor& ta = value(a);
  double s = 0.0;
  for (double v : ta.values) s += std::abs(v);
  return push("l1_norm", Tensor::scalar(s), {a.id}, [a](Graph& g, std::size_t self) {
    const double go = g.nodes_[self].grad[0];
    const auto& va = g.nodes_[a.id].value.values;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < va.size(); ++i)
      ga[i] += go * (va[i] > 0.0 ? 1.0 : (va[i] < 0.0 ? -1.0 : 0.0));
  });
}

Var Graph::inner_product(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.size() != tb.size())
    fail(ErrorKind::structural, "inner_product: shape mismatch " + shape_string(ta.shape) +
                                    " vs " + shape_string(tb.shape));
  double s = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) s += ta.values[i] * tb.values[i];
  return push("inner_product", Tensor::scalar(s), {a.id, b.id},
              [a, b](Graph& g, std::size_t self) {
                const double go = g.nodes_[self].grad[0];
                const auto& va = g.nodes_[a.id].value.values;
                const auto& vb = g.nodes_[b.id].value.values;
                if (g.nodes_[a.id].needs_grad) {
                  auto& ga = g.grad_buffer(a.id);
                  for (std::size_t i = 0; i < va.size(); ++i) ga[i] += go * vb[i];
                }
                if (g.nodes_[b.id].needs_grad) {
                  auto& gb = g.grad_buffer(b.id);
                  for (std::size_t i = 0; i < vb.size(); ++i) gb[i] += go * va[i];
                }
              });
}

Var Graph::stop_gradient_mask(Var a, const std::vector<std::uint8_t>& mask) {
  const Tensor& ta = value(a);
  if (mask.size() != ta.size())
    fail(ErrorKind::structural, "stop_gradient_mask: mask of " + std::to_string(mask.size()) +
                                    " entries for tensor " + shape_string(ta.shape));
  Tensor out(ta.shape, ta.values);
  return push("stop_gradient_mask", std::move(out), {a.id}, [a, mask](Graph& g, std::size_t self) {
    const auto& go = g.nodes_[self].grad;
    auto& ga = g.grad_buffer(a.id);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (mask[i]) ga[i] += go[i];
  });
}

void Graph::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1)
    fail(ErrorKind::usage, "backward() needs a scalar loss, got shape " +
                               shape_string(root.value.shape));
  if (backward_done_) fail(ErrorKind::usage, "backward() already ran on this graph");
  backward_done_ = true;

  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, id);
  }
  for (auto& n : nodes_) {
    if (!n.bound || !n.bound->requires_grad) continue;
    Tensor& t = *n.bound;
    if (t.grad.size() != t.values.size()) t.grad.assign(t.values.size(), 0.0);
    if (n.grad.empty()) continue;
    for (std::size_t i = 0; i < n.grad.size(); ++i) t.grad[i] += n.grad[i];
  }
}

void sgd_step(std::span<Tensor* const> params, double learning_rate) {
  if (!(learning_rate >= 0.0)) fail(ErrorKind::usage, "learning rate must be non-negative");
  for (Tensor* p : params) {
    if (!p->has_grad())
      fail(ErrorKind::usage, "sgd_step: parameter of shape " + shape_string(p->shape) +
                                 " has no gradient");
  }
  for (Tensor* p : params) {
    for (std::size_t i = 0; i < p->values.size(); ++i) p->values[i] -= learning_rate * p->grad[i];
    p->clear_grad();
  }
}

MomentumSgd::MomentumSgd(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {
  if (!(learning_rate >= 0.0) || !(momentum >= 0.0) || momentum >= 1.0)
    fail(ErrorKind::config, "momentum SGD needs lr >= 0 and 0 <= momentum < 1");
}

void MomentumSgd::step(std::span<Tensor* const> params) {
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (Tensor* p : params) velocity_.emplace_back(p->values.size(), 0.0);
  }
  for (Tensor* p : params) {
    if (!p->has_grad())
      fail(ErrorKind::usage, "momentum step: parameter of shape " + shape_string(p->shape) +
                                 " has no gradient");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto& vel = velocity_[k];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      vel[i] = momentum_ * vel[i] + p.grad[i];
      p.values[i] -= learning_rate_ * vel[i];
    }
    p.clear_grad();
  }
}

}  // namespace wdsel::ad
