#include "rhgcn/batch_geometry.hpp"

#include <array>
#include <limits>

namespace rhgcn::ad {

namespace {

Var metric_row(Tape& tape, Eigen::Index width) {
  Matrix g = Matrix::Ones(1, width);
  g(0, 0) = -1.0;
  return tape.constant(std::move(g));
}

}  // namespace

Var lorentz_rowdot(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw DimensionError("lorentz_rowdot: ambient widths differ");
  return row_sum(mul(mul(a, b), metric_row(*a.tape(), a.cols())));
}

Var project_to_manifold(const Var& points) {
  const Eigen::Index d = points.cols() - 1;
  if (d < 1) throw DimensionError("project_to_manifold: need at least 2 columns");
  const Var spatial = slice_cols(points, 1, d);
  const Var time = sqrt(add_scalar(row_sum(square(spatial)), 1.0));
  const std::array<Var, 2> parts{time, spatial};
  return concat_cols(parts);
}

Var project_to_tangent(const Var& base, const Var& vectors) {
  return add(vectors, mul(lorentz_rowdot(base, vectors), base));
}

Var exp_map(const Var& base, const Var& tangents, const Tolerances& tol) {
  const double cap = tol.max_tangent_norm * tol.max_tangent_norm;
  const double inf = std::numeric_limits<double>::infinity();
  // Rows longer than max_tangent_norm are rescaled onto the cap; the factor is exactly 1 elsewhere.
  Tape& tape = *tangents.tape();
  const Var raw = lorentz_rowdot(tangents, tangents);
  const Var shrink = div(tape.constant(Matrix::Constant(1, 1, tol.max_tangent_norm)), sqrt(clamp(raw, cap, inf)));
  const Var v = mul(shrink, tangents);
  const Var sq = clamp(lorentz_rowdot(v, v), 0.0, inf);
  return project_to_manifold(add(mul(cosh_sqrt(sq), base), mul(sinhc_sqrt(sq), v)));
}

Var log_map(const Var& base, const Var& points) {
  // a = -<x,y>_L, written as 1 + <y-x, y-x>_L / 2 where it is small (accurate near x = y)
  // and taken directly where it is large. On the manifold both agree in value and slope.
  Tape& tape = *points.tape();
  const Var direct = neg(lorentz_rowdot(base, points));
  const Var diff = sub(points, base);
  const Var chord = clamp(lorentz_rowdot(diff, diff), 0.0, std::numeric_limits<double>::infinity());
  Matrix far = (direct.value().array() > 2.0).cast<double>().matrix();
  const Var a = add(mul(tape.constant(far), direct),
                    mul(tape.constant(Matrix(1.0 - far.array())), add_scalar(scale(chord, 0.5), 1.0)));
  const Var raw = mul(arcosh_ratio(a), sub(points, mul(a, base)));
  return project_to_tangent(base, raw);
}

Var parallel_transport(const Var& source, const Var& targets, const Var& tangents) {
  const Var a = neg(lorentz_rowdot(source, targets));
  const Var coef = div(lorentz_rowdot(targets, tangents), add_scalar(a, 1.0));
  const Var moved = add(tangents, mul(coef, add(targets, source)));
  return project_to_tangent(targets, moved);
}

Var lorentz_matvec(const Var& weight, const Var& points, const Var& origin) {
  if (weight.rows() != points.cols() || weight.cols() != points.cols()) {
    throw DimensionError("lorentz_matvec: weight must be (d+1)x(d+1)");
  }
  const Var mapped = matmul(log_map(origin, points), transpose(weight));
  return exp_map(origin, project_to_tangent(origin, mapped));
}

Var lorentz_scalar_mul(const Var& xi, const Var& points, const Var& origin) {
  return exp_map(origin, mul(xi, log_map(origin, points)));
}

Var lorentz_scalar_mul(double xi, const Var& points, const Var& origin) {
  return exp_map(origin, scale(log_map(origin, points), xi));
}

Var lorentz_add(const Var& x, const Var& y, const Var& origin) {
  return exp_map(x, parallel_transport(origin, x, log_map(origin, y)));
}

Var lorentz_activation(const Var& points, const Var& origin, Activation act) {
  Var t = log_map(origin, points);
  if (act == Activation::relu) {
    Matrix o = Matrix::Zero(1, origin.cols());
    o(0, 0) = 1.0;
    const Var canonical = origin.tape()->constant(std::move(o));
    const Var u = project_to_tangent(canonical, relu(parallel_transport(origin, canonical, t)));
    t = parallel_transport(canonical, origin, u);
  }
  return exp_map(origin, project_to_tangent(origin, t));
}

Var lorentz_aggregate(const SparseMatrix& adj, const Var& points, const Var& origin) {
  if (adj.cols() != points.rows()) throw DimensionError("lorentz_aggregate: adjacency does not match node count");
  return exp_map(origin, project_to_tangent(origin, spmm(adj, log_map(origin, points))));
}

Var origin_row(Tape& tape, const LorentzPoint& origin) { return tape.constant(origin.coords().transpose()); }

}  // namespace rhgcn::ad
