#include "rhgcn/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace rhgcn::ad {

namespace {

std::atomic<testing::Fault> g_fault{testing::Fault::none};

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw UsageError("operation on an unbound Var");
  return *a.tape();
}

Tape& common_tape(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw UsageError("operands recorded on different tapes");
  return t;
}

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b, const Matrix& ma, const Matrix& mb) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw DimensionError("cannot broadcast " + shape(ma) + " with " + shape(mb));
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

/// Sums g down to the given (possibly broadcast) shape.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

template <typename Forward, typename Backward>
Var binary(const Var& a, const Var& b, Forward forward, Backward backward) {
  Tape& t = common_tape(a, b);
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  const Eigen::Index rows = broadcast_dim(va.rows(), vb.rows(), va, vb);
  const Eigen::Index cols = broadcast_dim(va.cols(), vb.cols(), va, vb);
  Matrix ea = expand(va, rows, cols);
  Matrix eb = expand(vb, rows, cols);
  Matrix out = forward(ea.array(), eb.array()).matrix();
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib, backward](Tape& tape, std::size_t self) {
    const Matrix& va = tape.value_of(ia);
    const Matrix& vb = tape.value_of(ib);
    const Matrix& g = tape.grad_of(self);
    const Matrix ea = expand(va, g.rows(), g.cols());
    const Matrix eb = expand(vb, g.rows(), g.cols());
    Matrix ga;
    Matrix gb;
    backward(g.array(), ea.array(), eb.array(), ga, gb);
    if (tape.requires_grad(ia)) tape.accumulate(ia, reduce_to(ga, va.rows(), va.cols()));
    if (tape.requires_grad(ib)) tape.accumulate(ib, reduce_to(gb, vb.rows(), vb.cols()));
  });
}

/// Elementwise unary op with derivative computed from (input, output).
template <typename Forward, typename Derivative>
Var unary(const Var& a, Forward forward, Derivative derivative) {
  Tape& t = tape_of(a);
  Matrix out = a.value().unaryExpr(forward);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia, derivative](Tape& tape, std::size_t self) {
    const Matrix& x = tape.value_of(ia);
    const Matrix& y = tape.value_of(self);
    Matrix g = tape.grad_of(self);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      g.data()[i] *= derivative(x.data()[i], y.data()[i]);
    }
    tape.accumulate(ia, g);
  });
}

std::uint64_t mask_digest(const Matrix& x, double lo, double hi) {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const std::uint64_t state = x.data()[i] <= lo ? 1 : (x.data()[i] >= hi ? 2 : 0);
    h = (h ^ state) * 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Var / Tape

const Matrix& Var::value() const { return tape_of(*this).value_of(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw DimensionError("scalar() on a " + shape(v) + " node");
  return v(0, 0);
}

Var Tape::push(Node node) {
  if (finished_) throw UsageError("tape already consumed by backward(); record a new tape");
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) { return push(Node{std::move(value), {}, {}, false, true, false}); }

Var Tape::parameter(Matrix value) { return push(Node{std::move(value), {}, {}, true, true, false}); }

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw UsageError("input recorded on a different tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  return push(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, needs, false, false});
}

const Matrix& Tape::value_of(std::size_t id) const {
  if (id >= nodes_.size()) throw UsageError("Var does not belong to this tape");
  if (nodes_[id].released) throw UsageError("intermediate value released by backward()");
  return nodes_[id].value;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (g.rows() != node.value.rows() || g.cols() != node.value.cols()) {
    throw DimensionError("gradient shape " + shape(g) + " does not match node shape " + shape(node.value));
  }
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::note_branch(std::uint64_t word) { branch_hash_ = (branch_hash_ ^ word) * 0x100000001b3ULL; }

void Tape::backward(const Var& loss) {
  if (finished_) throw UsageError("backward() called twice on the same tape");
  if (loss.tape() != this) throw UsageError("loss was recorded on a different tape");
  const Matrix& v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("backward() needs a scalar loss, got " + shape(v));
  finished_ = true;
  if (nodes_[loss.id()].requires_grad) {
    nodes_[loss.id()].grad = Matrix::Ones(1, 1);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (node.backward && node.grad.size() != 0) node.backward(*this, i);
    }
  }
  for (Node& node : nodes_) {
    node.backward = {};
    if (!node.leaf) {
      node.value = Matrix();
      node.grad = Matrix();
      node.released = true;
    }
  }
}

Matrix Tape::grad(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw UsageError("Var does not belong to this tape");
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, [](const auto& x, const auto& y) { return x + y; },
      [](const auto& g, const auto&, const auto&, Matrix& ga, Matrix& gb) {
        ga = g.matrix();
        gb = g.matrix();
      });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, [](const auto& x, const auto& y) { return x - y; },
      [](const auto& g, const auto&, const auto&, Matrix& ga, Matrix& gb) {
        ga = g.matrix();
        gb = -g.matrix();
      });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, [](const auto& x, const auto& y) { return x * y; },
      [](const auto& g, const auto& x, const auto& y, Matrix& ga, Matrix& gb) {
        ga = (g * y).matrix();
        gb = (g * x).matrix();
      });
}

Var div(const Var& a, const Var& b) {
  return binary(
      a, b, [](const auto& x, const auto& y) { return x / y; },
      [](const auto& g, const auto& x, const auto& y, Matrix& ga, Matrix& gb) {
        ga = (g / y).matrix();
        gb = (-g * x / (y * y)).matrix();
      });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double shift) {
  return unary(a, [shift](double x) { return x + shift; }, [](double, double) { return 1.0; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(const Var& a) {
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var cosh(const Var& a) {
  return unary(a, [](double x) { return std::cosh(x); }, [](double x, double) { return std::sinh(x); });
}

Var sinh(const Var& a) {
  return unary(a, [](double x) { return std::sinh(x); }, [](double x, double) { return std::cosh(x); });
}

Var arcosh(const Var& a, double boundary_offset) {
  const double floor = 1.0 + boundary_offset;
  tape_of(a).note_branch(mask_digest(a.value(), floor, std::numeric_limits<double>::infinity()));
  return unary(
      a, [floor](double x) { return std::acosh(std::max(x, floor)); },
      [floor](double x, double) { return x <= floor ? 0.0 : 1.0 / std::sqrt(x * x - 1.0); });
}

Var relu(const Var& a) {
  tape_of(a).note_branch(mask_digest(a.value(), 0.0, std::numeric_limits<double>::infinity()));
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var clamp(const Var& a, double lo, double hi) {
  tape_of(a).note_branch(mask_digest(a.value(), lo, hi));
  return unary(
      a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var cosh_sqrt(const Var& s) {
  return unary(s, [](double x) { return rhgcn::detail::cosh_sqrt(x); },
               [](double x, double) { return 0.5 * rhgcn::detail::sinhc_sqrt(x); });
}

Var sinhc_sqrt(const Var& s) {
  return unary(s, [](double x) { return rhgcn::detail::sinhc_sqrt(x); },
               [](double x, double) { return rhgcn::detail::sinhc_sqrt_deriv(x); });
}

Var arcosh_ratio(const Var& a) {
  return unary(a, [](double x) { return rhgcn::detail::arcosh_ratio(x); },
               [](double x, double) { return rhgcn::detail::arcosh_ratio_deriv(x); });
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape(a.value()) + " times " + shape(b.value()));
  }
  Matrix out = a.value() * b.value();
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad_of(self);
    if (tape.requires_grad(ia)) tape.accumulate(ia, g * tape.value_of(ib).transpose());
    if (tape.requires_grad(ib)) {
      Matrix gb = tape.value_of(ia).transpose() * g;
      if (testing::active_fault() == testing::Fault::matmul_rhs) gb *= 1.5;
      tape.accumulate(ib, gb);
    }
  });
}

Var transpose(const Var& a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().transpose();
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia](Tape& tape, std::size_t self) {
    tape.accumulate(ia, tape.grad_of(self).transpose());
  });
}

Var spmm(const SparseMatrix& lhs, const Var& rhs) {
  Tape& t = tape_of(rhs);
  if (lhs.cols() != rhs.rows()) {
    throw DimensionError("spmm: sparse " + std::to_string(lhs.rows()) + "x" + std::to_string(lhs.cols()) +
                         " times " + shape(rhs.value()));
  }
  Matrix out = lhs * rhs.value();
  const std::size_t ir = rhs.id();
  // The sparse operand is captured by pointer; it must outlive the tape.
  const SparseMatrix* op = &lhs;
  return t.record(std::move(out), {rhs}, [ir, op](Tape& tape, std::size_t self) {
    tape.accumulate(ir, Matrix(op->transpose() * tape.grad_of(self)));
  });
}

// ---------------------------------------------------------------------------
// Reductions and reshaping

Var sum(const Var& a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return t.record(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia, r, c](Tape& tape, std::size_t self) {
    tape.accumulate(ia, Matrix::Constant(r, c, tape.grad_of(self)(0, 0)));
  });
}

Var mean(const Var& a) {
  const auto count = static_cast<double>(a.value().size());
  if (count == 0) throw DimensionError("mean of an empty node");
  return scale(sum(a), 1.0 / count);
}

Var row_sum(const Var& a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Eigen::Index c = a.cols();
  Matrix out = a.value().rowwise().sum();
  return t.record(std::move(out), {a}, [ia, c](Tape& tape, std::size_t self) {
    tape.accumulate(ia, tape.grad_of(self).replicate(1, c));
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols out of range for " + shape(a.value()));
  }
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  Matrix out = a.value().middleCols(start, count);
  return t.record(std::move(out), {a}, [ia, r, c, start, count](Tape& tape, std::size_t self) {
    Matrix g = Matrix::Zero(r, c);
    g.middleCols(start, count) = tape.grad_of(self);
    tape.accumulate(ia, g);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Tape& t = tape_of(parts.front());
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw UsageError("concat_cols: parts on different tapes");
    if (p.rows() != rows) throw DimensionError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  return t.record(std::move(out), parts, [ids, widths](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad_of(self);
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tape.requires_grad(ids[k])) tape.accumulate(ids[k], g.middleCols(at, widths[k]));
      at += widths[k];
    }
  });
}

Var gather_rows(const Var& a, std::span<const int> rows) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= v.rows()) throw IndexError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(k)) = v.row(rows[k]);
  }
  const std::size_t ia = a.id();
  const Eigen::Index r = v.rows();
  const Eigen::Index c = v.cols();
  std::vector<int> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a}, [ia, r, c, idx](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad_of(self);
    Matrix scatter = Matrix::Zero(r, c);
    for (std::size_t k = 0; k < idx.size(); ++k) scatter.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    tape.accumulate(ia, scatter);
  });
}

// ---------------------------------------------------------------------------
// Classification head

Var log_softmax(const Var& a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {a}, [ia](Tape& tape, std::size_t self) {
    const Matrix& y = tape.value_of(self);
    const Matrix& g = tape.grad_of(self);
    Matrix gx = g - (y.array().exp().colwise() * g.rowwise().sum().array()).matrix();
    tape.accumulate(ia, gx);
  });
}

Var nll_loss(const Var& log_probs, std::span<const int> labels, std::span<const int> idx) {
  if (idx.empty()) throw UsageError("nll_loss: empty index set");
  Tape& t = tape_of(log_probs);
  const Matrix& lp = log_probs.value();
  if (static_cast<Eigen::Index>(labels.size()) != lp.rows()) {
    throw DimensionError("nll_loss: one label per row required");
  }
  double total = 0.0;
  std::vector<std::pair<int, int>> picks;
  picks.reserve(idx.size());
  for (int i : idx) {
    if (i < 0 || i >= lp.rows()) throw IndexError("nll_loss: node index out of range");
    const int y = labels[i];
    if (y < 0 || y >= lp.cols()) throw IndexError("nll_loss: label out of range");
    total -= lp(i, y);
    picks.emplace_back(i, y);
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  const std::size_t ia = log_probs.id();
  const Eigen::Index r = lp.rows();
  const Eigen::Index c = lp.cols();
  return t.record(Matrix::Constant(1, 1, total * inv), {log_probs},
                  [ia, r, c, picks, inv](Tape& tape, std::size_t self) {
                    const double g = tape.grad_of(self)(0, 0);
                    Matrix gx = Matrix::Zero(r, c);
                    for (const auto& [i, y] : picks) gx(i, y) -= g * inv;
                    tape.accumulate(ia, gx);
                  });
}

namespace testing {

void inject_fault(Fault fault) { g_fault.store(fault); }
Fault active_fault() { return g_fault.load(); }

}  // namespace testing

}  // namespace rhgcn::ad
