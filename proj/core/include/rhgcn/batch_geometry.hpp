#pragma once

// Differentiable, row-batched Lorentz maps recorded on an autodiff tape.
//
// Rows of an n x (d+1) node are points (or tangent vectors) of one component.
// A "base" argument is either a single 1 x (d+1) row broadcast over all rows
// (a component origin) or an n x (d+1) node of per-row base points. The maps
// agree with the point-level functions in lorentz.hpp / manifold_ops.hpp; the
// only difference is the transport, which uses the algebraically equivalent
// closed form v + <y,v>_L / (1 - <x,y>_L) (x + y) that has no 0/0 at x = y.

#include "rhgcn/autodiff.hpp"

namespace rhgcn::ad {

Var lorentz_rowdot(const Var& a, const Var& b);
Var project_to_manifold(const Var& points);
Var project_to_tangent(const Var& base, const Var& vectors);
Var exp_map(const Var& base, const Var& tangents, const Tolerances& tol = default_tolerances());
Var log_map(const Var& base, const Var& points);
/// Transport from a single source row to per-row targets.
Var parallel_transport(const Var& source, const Var& targets, const Var& tangents);

/// Row-wise W (x) h at the origin.
Var lorentz_matvec(const Var& weight, const Var& points, const Var& origin);
/// Row-wise xi (.) h; xi is 1x1 or n x 1.
Var lorentz_scalar_mul(const Var& xi, const Var& points, const Var& origin);
Var lorentz_scalar_mul(double xi, const Var& points, const Var& origin);
/// Row-wise x (+) y.
Var lorentz_add(const Var& x, const Var& y, const Var& origin);

enum class Activation { identity, relu };
Var lorentz_activation(const Var& points, const Var& origin, Activation act);

/// P (x) H = exp_o(P log_o(H)): neighbourhood aggregation in T_o.
Var lorentz_aggregate(const SparseMatrix& adj, const Var& points, const Var& origin);

Var origin_row(Tape& tape, const LorentzPoint& origin);

}  // namespace rhgcn::ad
