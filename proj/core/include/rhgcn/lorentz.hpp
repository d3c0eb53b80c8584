#pragma once

// Point-level primitives of the Lorentz (hyperboloid) model with curvature -1.
//
// A point of L^d is an ambient vector x in R^{d+1} with <x,x>_L = -1 and x_0 > 0.
// Everything here works in double precision and is total on valid inputs: the
// singular spots of the closed-form maps (coincident points, zero tangents) are
// handled by clamps and series fallbacks configured through Tolerances.

#include <Eigen/Core>

#include "rhgcn/error.hpp"

namespace rhgcn {

using Vector = Eigen::VectorXd;

struct Tolerances {
  double manifold_eps = 1e-6;   // accepted |<x,x>_L + 1| for a point
  double arcosh_clamp = 1e-12;  // offset above 1 where arcosh derivatives are evaluated
  double taylor_cutoff = 1e-6;  // below this, series fallbacks replace the closed forms
  double max_tangent_norm = 32.0;  // exp map argument is clipped here; cosh(32) ~ 4e13

  /// Throws ConfigError unless every field is strictly positive.
  void validate() const;
};

const Tolerances& default_tolerances();

class LorentzPoint {
 public:
  /// Validates the manifold invariants; throws NumericError on violation.
  static LorentzPoint from_ambient(Vector coords, const Tolerances& tol = default_tolerances());
  /// Trusts the caller. Used by the maps below, whose outputs are on the manifold by construction.
  static LorentzPoint unchecked(Vector coords) { return LorentzPoint(std::move(coords)); }

  const Vector& coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size() - 1; }
  double operator[](Eigen::Index i) const { return coords_[i]; }

 private:
  explicit LorentzPoint(Vector coords) : coords_(std::move(coords)) {}
  Vector coords_;
};

class TangentVector {
 public:
  /// Validates <base, coords>_L = 0 and a numerically nonnegative Lorentz square.
  static TangentVector from_ambient(const LorentzPoint& base, Vector coords,
                                    const Tolerances& tol = default_tolerances());
  static TangentVector unchecked(const LorentzPoint& base, Vector coords) {
    return TangentVector(base, std::move(coords));
  }
  static TangentVector zero(const LorentzPoint& base) {
    return TangentVector(base, Vector::Zero(base.coords().size()));
  }

  const Vector& coords() const noexcept { return coords_; }
  const LorentzPoint& base() const noexcept { return base_; }

 private:
  TangentVector(const LorentzPoint& base, Vector coords) : coords_(std::move(coords)), base_(base) {}
  Vector coords_;
  LorentzPoint base_;
};

/// -u_0 v_0 + sum_{i>=1} u_i v_i. Throws DimensionError on length mismatch or length < 2.
double lorentz_inner(const Vector& u, const Vector& v);

/// sqrt(max(<v,v>_L, 0)).
double lorentz_norm(const TangentVector& v);
double lorentz_norm(const Vector& v);

LorentzPoint canonical_origin(Eigen::Index d);

/// Recomputes the time coordinate from the spatial part.
LorentzPoint project_to_manifold(const Vector& raw);

/// raw + <x, raw>_L x, the Lorentz-orthogonal projection onto T_x.
TangentVector project_to_tangent(const LorentzPoint& x, const Vector& raw);

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v,
                     const Tolerances& tol = default_tolerances());
TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y,
                      const Tolerances& tol = default_tolerances());
double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y);

/// Transport of v from T_x to T_y along the connecting geodesic.
TangentVector parallel_transport(const LorentzPoint& x, const LorentzPoint& y, const TangentVector& v,
                                 const Tolerances& tol = default_tolerances());

/// Residual |<x,x>_L + 1|.
double manifold_residual(const Vector& x);
bool on_manifold(const Vector& x, double eps = 1e-6);

namespace detail {

// Smooth scalar helpers shared with the batched differentiable maps. All three are
// even/analytic at the origin of their argument, so they have bounded derivatives
// where the textbook forms divide by zero.

/// cosh(sqrt(s)) for s >= 0.
double cosh_sqrt(double s);
/// sinh(sqrt(s)) / sqrt(s) for s >= 0; 1 at s = 0.
double sinhc_sqrt(double s);
double sinhc_sqrt_deriv(double s);
/// arcosh(a) / sqrt(a^2 - 1) for a >= 1; 1 at a = 1.
double arcosh_ratio(double a);
double arcosh_ratio_deriv(double a);

}  // namespace detail

}  // namespace rhgcn
