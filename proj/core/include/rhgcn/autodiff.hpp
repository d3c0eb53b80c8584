#pragma once

// Reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every primitive application in execution order; backward()
// walks the record once in reverse, accumulating vector-Jacobian products into
// the inputs that require gradients. One tape per training step; a tape is not
// thread-safe and is meant to stay on the thread that built it.

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "rhgcn/graph.hpp"
#include "rhgcn/manifold_ops.hpp"

namespace rhgcn::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node. Throws DimensionError otherwise.
  double scalar() const;

  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that receives a gradient.
  Var parameter(Matrix value);

  /// Seeds d(loss)/d(loss) = 1 and propagates. The loss must be 1x1. After this
  /// call intermediate values are released; leaf gradients stay readable.
  /// A second call throws UsageError.
  void backward(const Var& loss);

  /// Gradient of a leaf (zeros if the loss does not depend on it).
  Matrix grad(const Var& v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  bool finished() const noexcept { return finished_; }

  /// Digest of every branch decision taken by piecewise primitives (relu, clamp).
  /// Two evaluations with equal digests took the same smooth piece.
  std::uint64_t branch_signature() const noexcept { return branch_hash_; }

  // Primitive-author interface.
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }
  const Matrix& value_of(std::size_t id) const;
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// grad[id] += g, skipped when the node does not require a gradient.
  void accumulate(std::size_t id, const Matrix& g);
  void note_branch(std::uint64_t word);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
    bool leaf = false;
    bool released = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool finished_ = false;
  std::uint64_t branch_hash_ = 0xcbf29ce484222325ULL;
};

// Elementwise binary ops broadcast a 1-sized dimension (1x1, nx1 or 1xm operands).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var neg(const Var& a);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double shift);
Var square(const Var& a);
Var sqrt(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var cosh(const Var& a);
Var sinh(const Var& a);
/// arcosh with the input clamped to >= 1 + boundary_offset; zero gradient where clamped.
Var arcosh(const Var& a, double boundary_offset = 1e-12);
Var relu(const Var& a);
/// Passes gradient 1 strictly inside [lo, hi] and 0 where the bound is active.
Var clamp(const Var& a, double lo, double hi);

// Smooth coefficient functions of the Lorentz maps (see rhgcn::detail).
Var cosh_sqrt(const Var& s);
Var sinhc_sqrt(const Var& s);
Var arcosh_ratio(const Var& a);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// Constant sparse matrix times a dense node.
Var spmm(const SparseMatrix& lhs, const Var& rhs);

Var sum(const Var& a);
Var mean(const Var& a);
/// n x m -> n x 1.
Var row_sum(const Var& a);

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(const Var& a, std::span<const int> rows);

/// Row-wise log-softmax.
Var log_softmax(const Var& a);
/// Mean negative log-likelihood of labels[idx] under row-wise log-probabilities.
Var nll_loss(const Var& log_probs, std::span<const int> labels, std::span<const int> idx);

namespace testing {

/// Deliberate backward-rule corruption for negative-control tests.
enum class Fault { none, matmul_rhs };
void inject_fault(Fault fault);
Fault active_fault();

}  // namespace testing

}  // namespace rhgcn::ad
