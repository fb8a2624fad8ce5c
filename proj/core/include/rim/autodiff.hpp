#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "rim/tensor.hpp"

/// Tensor-level reverse-mode differentiation.
///
/// A Tape records every operation whose result depends on a parameter. Each
/// recorded node keeps its parents alive and a closure that turns the node's
/// accumulated gradient into parent gradients. Nodes are appended after their
/// parents, so reverse recording order is a valid reverse topological order
/// and `backward` visits each node once.
///
/// In inference mode nothing is recorded and intermediates are released as
/// soon as the caller drops them.
namespace rim::ad {

struct Node {
  Tensor value;
  Tensor grad;  // empty until the first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  void accumulate(const Tensor& g);
  void accumulate(Tensor&& g);
};

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const { return node_->value; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  Tape& tape() const { return *tape_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend class Tape;
  Var(std::shared_ptr<Node> node, Tape* tape) : node_(std::move(node)), tape_(tape) {}

  std::shared_ptr<Node> node_;
  Tape* tape_ = nullptr;
};

enum class Mode { Record, Inference };

class Tape {
 public:
  explicit Tape(Mode mode = Mode::Record) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return mode_ == Mode::Record; }

  Var constant(Tensor value);
  /// Leaf whose gradient is collected by `backward` (a plain constant in inference mode).
  Var parameter(Tensor value);
  Var record(Tensor value, std::initializer_list<Var> parents, std::function<void(Node&)> backward);

  /// Reverse sweep from a scalar root. Throws a contract error for non-scalar roots.
  void backward(const Var& root);

  /// Gradient accumulated at `v`; exact zeros when `v` did not influence the root.
  Tensor gradient(const Var& v) const;

  std::size_t recorded_nodes() const noexcept { return nodes_.size(); }

 private:
  Mode mode_;
  bool swept_ = false;
  std::vector<std::shared_ptr<Node>> nodes_;
};

// Elementwise arithmetic
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var one_minus(const Var& a);

// Activations
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);

// Feature-stack operations
Var conv2d(const Var& input, const Var& kernels, const Var& bias);
Var dense(const Var& input, const Var& weights, const Var& bias);
Var dense(const Var& input, const Var& weights);
/// out(c, p) = u(c) * h(c, p)
Var channel_scale(const Var& u, const Var& h);
Var concat_channels(const Var& a, const Var& b);

/// Applies a fixed affine operator x -> M x + c. `adjoint` must apply M^T
/// exactly for the recorded gradient to be correct.
using LinearFn = std::function<Tensor(const Tensor&)>;
Var affine_map(const Var& x, LinearFn forward, LinearFn adjoint);

// Scalar reductions
Var sum(const Var& a);
Var sum_squares(const Var& a);
/// weight * sum((x - ref)^2)
Var weighted_squared_error(const Var& x, const Tensor& reference, double weight);
/// weight * sum_p |x_p - ref_p| over complex pixels of (2, H, W) stacks.
/// The derivative at a zero residual is taken as 0.
Var weighted_modulus_error(const Var& x, const Tensor& reference, double weight);

}  // namespace rim::ad
