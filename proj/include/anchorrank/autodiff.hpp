#pragma once

// Reverse-mode differentiation over a fixed op set.
//
// A Tape records forward values and an adjoint closure per node. Parameter
// leaves refer to a ParamSlot; backward() accumulates straight into the slot's
// gradient and refuses to run if the slot was mutated after the leaf was
// recorded.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anchorrank/kernels.hpp"
#include "anchorrank/tensor.hpp"

namespace anchorrank {

/// A trainable tensor with its gradient and Adam moments.
struct ParamSlot {
  std::string name;
  Tensor value;
  Tensor gradient;
  Tensor moment1;
  Tensor moment2;
  std::uint64_t step = 0;
  /// Bumped on every mutation of `value`; tapes check it before backward.
  std::uint64_t version = 0;
  /// Row 0 is held at zero and excluded from updates (embedding PAD row).
  bool freeze_row0 = false;

  ParamSlot() = default;
  ParamSlot(std::string slot_name, Tensor init);

  void zero_grad() { gradient.fill(0.0); }
  /// Marks `value` as changed outside the optimizer.
  void touch() { ++version; }
};

struct GraphError : std::logic_error {
  using std::logic_error::logic_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tape;

/// Handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  double scalar() const;
};

class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(ParamSlot& slot);

  /// Seeds d(out)/d(out) = 1 and propagates to every parameter leaf.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var push(Tensor value, std::vector<std::size_t> inputs,
           std::function<void(Tape&, std::size_t)> adjoint);
  const Tensor& value(std::size_t id) const;
  const Tensor& grad(std::size_t id) const;
  /// Gradient accumulator for node `id`; allocated lazily.
  Tensor& grad_acc(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    ParamSlot* slot = nullptr;
    std::uint64_t version = 0;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> adjoint;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

namespace ops {

/// Rows of `table` selected by `ids` (m x dim).
Var gather_rows(Var table, std::span<const int> ids);
/// Rows of `x` selected by `rows`.
Var select_rows(Var x, std::span<const std::size_t> rows);

Var conv1d_grams(Var E, Var filters, Var bias, std::size_t h);
Var cosine_matrix(Var A, Var B);
Var kernel_pool(Var M, const KernelConfig& cfg);
Var dense(Var x, Var W, Var b, Activation act);

/// Column-wise max over rows (m x F -> F); ties resolve to the first row.
Var max_over_rows(Var x);
Var concat(std::span<const Var> parts);
Var sum(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, double factor);
/// max(0, margin - x) elementwise.
Var hinge(Var x, double margin = 1.0);
Var softmax(Var x);
Var log(Var x);
/// Numerically stable log(softmax(x)).
Var log_softmax(Var x);
Var pick(Var x, std::size_t index);

}  // namespace ops

}  // namespace anchorrank
