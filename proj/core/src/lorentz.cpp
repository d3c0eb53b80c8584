#include "rhgcn/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rhgcn {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw NumericError(std::string(what) + ": non-finite coordinates");
  }
}

}  // namespace

void Tolerances::validate() const {
  if (!(manifold_eps > 0 && arcosh_clamp > 0 && taylor_cutoff > 0 && max_tangent_norm > 0)) {
    throw ConfigError("tolerances must be strictly positive");
  }
}

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

LorentzPoint LorentzPoint::from_ambient(Vector coords, const Tolerances& tol) {
  if (coords.size() < 2) {
    throw DimensionError("Lorentz point needs at least 2 ambient coordinates");
  }
  require_finite(coords, "LorentzPoint");
  if (!(coords[0] > 0.0) || manifold_residual(coords) >= tol.manifold_eps) {
    throw NumericError("ambient vector is not on the hyperboloid (residual " +
                       std::to_string(manifold_residual(coords)) + ")");
  }
  return LorentzPoint(std::move(coords));
}

TangentVector TangentVector::from_ambient(const LorentzPoint& base, Vector coords, const Tolerances& tol) {
  if (coords.size() != base.coords().size()) {
    throw DimensionError("tangent vector length does not match its base point");
  }
  require_finite(coords, "TangentVector");
  const double scale = std::max(1.0, coords.cwiseAbs().maxCoeff() * base.coords().cwiseAbs().maxCoeff());
  if (std::abs(lorentz_inner(base.coords(), coords)) > tol.manifold_eps * scale) {
    throw NumericError("vector is not tangent at its base point");
  }
  if (lorentz_inner(coords, coords) < -1e-9 * scale) {
    throw NumericError("tangent vector has a negative Lorentz square");
  }
  return TangentVector(base, std::move(coords));
}

double lorentz_inner(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw DimensionError("lorentz_inner: length mismatch " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  }
  if (u.size() < 2) {
    throw DimensionError("lorentz_inner: vectors need length >= 2");
  }
  return -u[0] * v[0] + u.tail(u.size() - 1).dot(v.tail(v.size() - 1));
}

double lorentz_norm(const Vector& v) { return std::sqrt(std::max(lorentz_inner(v, v), 0.0)); }

double lorentz_norm(const TangentVector& v) { return lorentz_norm(v.coords()); }

double manifold_residual(const Vector& x) { return std::abs(lorentz_inner(x, x) + 1.0); }

bool on_manifold(const Vector& x, double eps) {
  return x.size() >= 2 && x.allFinite() && x[0] > 0.0 && manifold_residual(x) < eps;
}

LorentzPoint canonical_origin(Eigen::Index d) {
  if (d < 1) {
    throw DimensionError("canonical_origin: dimension must be >= 1");
  }
  Vector o = Vector::Zero(d + 1);
  o[0] = 1.0;
  return LorentzPoint::unchecked(std::move(o));
}

LorentzPoint project_to_manifold(const Vector& raw) {
  if (raw.size() < 2) {
    throw DimensionError("project_to_manifold: need at least 2 coordinates");
  }
  const auto spatial = raw.tail(raw.size() - 1);
  if (!spatial.allFinite()) {
    throw NumericError("project_to_manifold: non-finite spatial part");
  }
  Vector out(raw.size());
  out.tail(raw.size() - 1) = spatial;
  out[0] = std::sqrt(1.0 + spatial.squaredNorm());
  return LorentzPoint::unchecked(std::move(out));
}

TangentVector project_to_tangent(const LorentzPoint& x, const Vector& raw) {
  Vector out = raw + lorentz_inner(x.coords(), raw) * x.coords();
  return TangentVector::unchecked(x, std::move(out));
}

LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v, const Tolerances& tol) {
  if (v.coords().size() != x.coords().size()) {
    throw DimensionError("exp_map: tangent length does not match base point");
  }
  double norm = lorentz_norm(v);
  if (norm < tol.taylor_cutoff) {
    return project_to_manifold(x.coords() + v.coords());
  }
  Vector dir = v.coords() / norm;
  norm = std::min(norm, tol.max_tangent_norm);
  return project_to_manifold(std::cosh(norm) * x.coords() + std::sinh(norm) * dir);
}

namespace {

constexpr double kChordSwitch = 2.0;

// a - 1 with a = -<x,y>_L. Near x = y it is computed as <y-x, y-x>_L / 2, which stays
// accurate as the points merge; far apart the direct product avoids cancelling huge terms.
double excess(const LorentzPoint& x, const LorentzPoint& y) {
  const double direct = -lorentz_inner(x.coords(), y.coords());
  if (direct > kChordSwitch) return direct - 1.0;
  const Vector diff = y.coords() - x.coords();
  return 0.5 * std::max(lorentz_inner(diff, diff), 0.0);
}

}  // namespace

TangentVector log_map(const LorentzPoint& x, const LorentzPoint& y, const Tolerances& /*tol*/) {
  if (x.coords().size() != y.coords().size()) {
    throw DimensionError("log_map: points live on different manifolds");
  }
  const double e = excess(x, y);
  if (e == 0.0) {
    return TangentVector::zero(x);
  }
  const double a = 1.0 + e;
  return project_to_tangent(x, detail::arcosh_ratio(a) * (y.coords() - a * x.coords()));
}

double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y) {
  const double e = excess(x, y);
  if (e > kChordSwitch - 1.0) return std::acosh(1.0 + e);
  return 2.0 * std::asinh(std::sqrt(0.5 * e));
}

TangentVector parallel_transport(const LorentzPoint& x, const LorentzPoint& y, const TangentVector& v,
                                 const Tolerances& tol) {
  if (v.coords().size() != x.coords().size() || y.coords().size() != x.coords().size()) {
    throw DimensionError("parallel_transport: dimension mismatch");
  }
  const double dist = lorentz_distance(x, y);
  if (dist < tol.taylor_cutoff) {
    return project_to_tangent(y, v.coords());
  }
  const TangentVector log_xy = log_map(x, y, tol);
  const TangentVector log_yx = log_map(y, x, tol);
  const double coef = lorentz_inner(log_xy.coords(), v.coords()) / (dist * dist);
  return project_to_tangent(y, v.coords() - coef * (log_xy.coords() + log_yx.coords()));
}

namespace detail {

double cosh_sqrt(double s) { return std::cosh(std::sqrt(std::max(s, 0.0))); }

double sinhc_sqrt(double s) {
  s = std::max(s, 0.0);
  if (s < 1e-3) {
    return 1.0 + s / 6.0 * (1.0 + s / 20.0 * (1.0 + s / 42.0 * (1.0 + s / 72.0)));
  }
  const double t = std::sqrt(s);
  return std::sinh(t) / t;
}

double sinhc_sqrt_deriv(double s) {
  s = std::max(s, 0.0);
  if (s < 1e-2) {
    // d/ds sum_k s^k / (2k+1)!
    return 1.0 / 6.0 + s / 60.0 + s * s / 1680.0 + s * s * s / 90720.0 + s * s * s * s / 7983360.0;
  }
  const double t = std::sqrt(s);
  return (std::cosh(t) - std::sinh(t) / t) / (2.0 * s);
}

double arcosh_ratio(double a) {
  const double u = std::max(a - 1.0, 0.0);
  if (u < 1e-4) {
    return 1.0 - u / 3.0 + 2.0 * u * u / 15.0 - 2.0 * u * u * u / 35.0 + 8.0 * u * u * u * u / 315.0;
  }
  return std::acosh(1.0 + u) / std::sqrt(u * (2.0 + u));
}

double arcosh_ratio_deriv(double a) {
  const double u = std::max(a - 1.0, 0.0);
  if (u < 1e-3) {
    return -1.0 / 3.0 + 4.0 * u / 15.0 - 6.0 * u * u / 35.0 + 32.0 * u * u * u / 315.0 -
           40.0 * u * u * u * u / 693.0;
  }
  return (1.0 - a * arcosh_ratio(a)) / (u * (2.0 + u));
}

}  // namespace detail

}  // namespace rhgcn
