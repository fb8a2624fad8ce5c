#include "rim/autodiff.hpp"

#include <cmath>

#include "rim/conv.hpp"
#include "rim/error.hpp"

namespace rim::ad {
namespace {

void require_same_shape(const Var& a, const Var& b) {
  if (a.value().shape() != b.value().shape()) throw_error(ErrorKind::InvalidShape, "operand shapes differ");
}

template <class F>
Tensor map_values(const Tensor& a, F f) {
  Tensor out = Tensor::zeros_like(a);
  const double* in = a.ptr();
  double* o = out.ptr();
  for (std::size_t i = 0; i < a.numel(); ++i) o[i] = f(in[i]);
  return out;
}

Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

void Node::accumulate(const Tensor& g) {
  if (!requires_grad) return;
  if (grad.numel() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

void Node::accumulate(Tensor&& g) {
  if (!requires_grad) return;
  if (grad.numel() == 0) {
    grad = std::move(g);
  } else {
    grad += g;
  }
}

Var Tape::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node), this);
}

Var Tape::parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (recording()) {
    node->requires_grad = true;
    nodes_.push_back(node);
  }
  return Var(std::move(node), this);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (recording()) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
    nodes_.push_back(node);
  }
  return Var(std::move(node), this);
}

void Tape::backward(const Var& root) {
  if (!root.defined() || root.value().numel() != 1)
    throw_error(ErrorKind::Contract, "backward requires a scalar root");
  if (swept_) throw_error(ErrorKind::Contract, "tape has already been swept");
  swept_ = true;
  if (!root.requires_grad()) return;
  root.node()->accumulate(Tensor(root.value().shape(), 1.0));
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.numel() == 0 || !n.backward) continue;
    n.backward(n);
    // intermediate values and grads are no longer needed once propagated
    if (!n.parents.empty()) n.parents.clear();
  }
}

Tensor Tape::gradient(const Var& v) const {
  if (v.node()->grad.numel() == 0) return Tensor::zeros_like(v.value());
  return v.node()->grad;
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b);
  Tensor out = a.value();
  out += b.value();
  return a.tape().record(std::move(out), {a, b}, [](Node& self) {
    parent(self, 0).accumulate(self.grad);
    parent(self, 1).accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b);
  Tensor out = a.value();
  const double* pb = b.value().ptr();
  double* po = out.ptr();
  for (std::size_t i = 0; i < out.numel(); ++i) po[i] -= pb[i];
  return a.tape().record(std::move(out), {a, b}, [](Node& self) {
    parent(self, 0).accumulate(self.grad);
    Tensor neg = self.grad;
    neg *= -1.0;
    parent(self, 1).accumulate(std::move(neg));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b);
  Tensor out = a.value();
  const double* pb = b.value().ptr();
  double* po = out.ptr();
  for (std::size_t i = 0; i < out.numel(); ++i) po[i] *= pb[i];
  return a.tape().record(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const std::size_t n = self.grad.numel();
    const double* g = self.grad.ptr();
    if (pa.requires_grad) {
      Tensor ga = Tensor::zeros_like(self.grad);
      for (std::size_t i = 0; i < n; ++i) ga[i] = g[i] * pb.value[i];
      pa.accumulate(std::move(ga));
    }
    if (pb.requires_grad) {
      Tensor gb = Tensor::zeros_like(self.grad);
      for (std::size_t i = 0; i < n; ++i) gb[i] = g[i] * pa.value[i];
      pb.accumulate(std::move(gb));
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  out *= s;
  return a.tape().record(std::move(out), {a}, [s](Node& self) {
    Tensor g = self.grad;
    g *= s;
    parent(self, 0).accumulate(std::move(g));
  });
}

Var one_minus(const Var& a) {
  return a.tape().record(map_values(a.value(), [](double v) { return 1.0 - v; }), {a}, [](Node& self) {
    Tensor g = self.grad;
    g *= -1.0;
    parent(self, 0).accumulate(std::move(g));
  });
}

Var relu(const Var& a) {
  return a.tape().record(map_values(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {a},
                         [](Node& self) {
                           Tensor g = self.grad;
                           const Tensor& x = parent(self, 0).value;
                           for (std::size_t i = 0; i < g.numel(); ++i)
                             if (!(x[i] > 0.0)) g[i] = 0.0;
                           parent(self, 0).accumulate(std::move(g));
                         });
}

Var sigmoid(const Var& a) {
  return a.tape().record(map_values(a.value(), [](double v) { return 1.0 / (1.0 + std::exp(-v)); }), {a},
                         [](Node& self) {
                           Tensor g = self.grad;
                           for (std::size_t i = 0; i < g.numel(); ++i) {
                             const double s = self.value[i];
                             g[i] *= s * (1.0 - s);
                           }
                           parent(self, 0).accumulate(std::move(g));
                         });
}

Var tanh(const Var& a) {
  return a.tape().record(map_values(a.value(), [](double v) { return std::tanh(v); }), {a}, [](Node& self) {
    Tensor g = self.grad;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double t = self.value[i];
      g[i] *= 1.0 - t * t;
    }
    parent(self, 0).accumulate(std::move(g));
  });
}

Var conv2d(const Var& input, const Var& kernels, const Var& bias) {
  static const Tensor no_bias;
  const Tensor& b = bias.defined() ? bias.value() : no_bias;
  check_conv_shapes(input.value(), kernels.value(), b);
  Tensor out = rim::conv2d(input.value(), kernels.value(), b);
  if (!bias.defined()) {
    return input.tape().record(std::move(out), {input, kernels}, [](Node& self) {
      Node& x = parent(self, 0);
      Node& k = parent(self, 1);
      if (x.requires_grad) x.accumulate(conv2d_transpose(self.grad, k.value));
      if (k.requires_grad) k.accumulate(conv2d_kernel_grad(x.value, self.grad, k.value.dim(2), k.value.dim(3)));
    });
  }
  return input.tape().record(std::move(out), {input, kernels, bias}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& k = parent(self, 1);
    Node& bn = parent(self, 2);
    if (x.requires_grad) x.accumulate(conv2d_transpose(self.grad, k.value));
    if (k.requires_grad) k.accumulate(conv2d_kernel_grad(x.value, self.grad, k.value.dim(2), k.value.dim(3)));
    if (bn.requires_grad) {
      const std::size_t O = self.grad.dim(0);
      const std::size_t n = self.grad.numel() / O;
      Tensor gb({O});
      for (std::size_t o = 0; o < O; ++o) {
        double acc = 0.0;
        const double* p = self.grad.ptr() + o * n;
        for (std::size_t i = 0; i < n; ++i) acc += p[i];
        gb[o] = acc;
      }
      bn.accumulate(std::move(gb));
    }
  });
}

namespace {

Tensor dense_input_grad(const Tensor& grad, const Tensor& w) {
  // W^T g, reusing the 1x1 transpose path
  Tensor k4({w.dim(0), w.dim(1), 1, 1}, std::vector<double>(w.data().begin(), w.data().end()));
  return conv2d_transpose(grad, k4);
}

Tensor dense_weight_grad(const Tensor& x, const Tensor& grad) {
  Tensor k = conv2d_kernel_grad(x, grad, 1, 1);
  return Tensor({grad.dim(0), x.dim(0)}, std::vector<double>(k.data().begin(), k.data().end()));
}

Tensor channel_sums(const Tensor& g) {
  const std::size_t C = g.dim(0);
  const std::size_t n = g.numel() / C;
  Tensor out({C});
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    const double* p = g.ptr() + c * n;
    for (std::size_t i = 0; i < n; ++i) acc += p[i];
    out[c] = acc;
  }
  return out;
}

}  // namespace

Var dense(const Var& input, const Var& weights, const Var& bias) {
  Tensor out = rim::dense(input.value(), weights.value(), bias.value());
  return input.tape().record(std::move(out), {input, weights, bias}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& w = parent(self, 1);
    Node& b = parent(self, 2);
    if (x.requires_grad) x.accumulate(dense_input_grad(self.grad, w.value));
    if (w.requires_grad) w.accumulate(dense_weight_grad(x.value, self.grad));
    if (b.requires_grad) b.accumulate(channel_sums(self.grad));
  });
}

Var dense(const Var& input, const Var& weights) {
  Tensor out = rim::dense(input.value(), weights.value(), Tensor{});
  return input.tape().record(std::move(out), {input, weights}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& w = parent(self, 1);
    if (x.requires_grad) x.accumulate(dense_input_grad(self.grad, w.value));
    if (w.requires_grad) w.accumulate(dense_weight_grad(x.value, self.grad));
  });
}

Var channel_scale(const Var& u, const Var& h) {
  const Tensor& hv = h.value();
  if (u.value().rank() != 1 || hv.rank() != 3 || u.value().dim(0) != hv.dim(0))
    throw_error(ErrorKind::InvalidShape, "channel_scale expects (C) and (C, H, W)");
  const std::size_t C = hv.dim(0), n = hv.numel() / C;
  Tensor out = hv;
  for (std::size_t c = 0; c < C; ++c) {
    double* p = out.ptr() + c * n;
    for (std::size_t i = 0; i < n; ++i) p[i] *= u.value()[c];
  }
  return u.tape().record(std::move(out), {u, h}, [C, n](Node& self) {
    Node& un = parent(self, 0);
    Node& hn = parent(self, 1);
    if (un.requires_grad) {
      Tensor gu({C});
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        const double* g = self.grad.ptr() + c * n;
        const double* x = hn.value.ptr() + c * n;
        for (std::size_t i = 0; i < n; ++i) acc += g[i] * x[i];
        gu[c] = acc;
      }
      un.accumulate(std::move(gu));
    }
    if (hn.requires_grad) {
      Tensor gh = self.grad;
      for (std::size_t c = 0; c < C; ++c) {
        double* p = gh.ptr() + c * n;
        for (std::size_t i = 0; i < n; ++i) p[i] *= un.value[c];
      }
      hn.accumulate(std::move(gh));
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2))
    throw_error(ErrorKind::InvalidShape, "concat_channels spatial mismatch");
  std::vector<double> data(av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  const std::size_t split = av.numel();
  return a.tape().record(Tensor({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)}, std::move(data)), {a, b},
                         [split](Node& self) {
                           Node& pa = parent(self, 0);
                           Node& pb = parent(self, 1);
                           const auto g = self.grad.data();
                           if (pa.requires_grad)
                             pa.accumulate(Tensor(pa.value.shape(), std::vector<double>(g.begin(), g.begin() + split)));
                           if (pb.requires_grad)
                             pb.accumulate(Tensor(pb.value.shape(), std::vector<double>(g.begin() + split, g.end())));
                         });
}

Var affine_map(const Var& x, LinearFn forward, LinearFn adjoint) {
  Tensor out = forward(x.value());
  return x.tape().record(std::move(out), {x}, [adj = std::move(adjoint)](Node& self) {
    parent(self, 0).accumulate(adj(self.grad));
  });
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  return a.tape().record(scalar(acc), {a}, [](Node& self) {
    parent(self, 0).accumulate(Tensor(parent(self, 0).value.shape(), self.grad[0]));
  });
}

Var sum_squares(const Var& a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v * v;
  return a.tape().record(scalar(acc), {a}, [](Node& self) {
    Tensor g = parent(self, 0).value;
    g *= 2.0 * self.grad[0];
    parent(self, 0).accumulate(std::move(g));
  });
}

Var weighted_squared_error(const Var& x, const Tensor& reference, double weight) {
  if (x.value().shape() != reference.shape()) throw_error(ErrorKind::InvalidShape, "loss operand shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.numel(); ++i) {
    const double d = x.value()[i] - reference[i];
    acc += d * d;
  }
  return x.tape().record(scalar(weight * acc), {x}, [reference, weight](Node& self) {
    const Tensor& xv = parent(self, 0).value;
    Tensor g = Tensor::zeros_like(xv);
    const double s = 2.0 * weight * self.grad[0];
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = s * (xv[i] - reference[i]);
    parent(self, 0).accumulate(std::move(g));
  });
}

Var weighted_modulus_error(const Var& x, const Tensor& reference, double weight) {
  const Tensor& xv = x.value();
  if (xv.shape() != reference.shape() || xv.rank() != 3 || xv.dim(0) != 2)
    throw_error(ErrorKind::InvalidShape, "modulus loss expects matching (2, H, W) stacks");
  const std::size_t n = xv.numel() / 2;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::hypot(xv[i] - reference[i], xv[n + i] - reference[n + i]);
  return x.tape().record(scalar(weight * acc), {x}, [reference, weight, n](Node& self) {
    const Tensor& v = parent(self, 0).value;
    Tensor g = Tensor::zeros_like(v);
    const double s = weight * self.grad[0];
    for (std::size_t i = 0; i < n; ++i) {
      const double dr = v[i] - reference[i];
      const double di = v[n + i] - reference[n + i];
      const double m = std::hypot(dr, di);
      if (m > 0.0) {
        g[i] = s * dr / m;
        g[n + i] = s * di / m;
      }
    }
    parent(self, 0).accumulate(std::move(g));
  });
}

}  // namespace rim::ad
