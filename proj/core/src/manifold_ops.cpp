#include "rhgcn/manifold_ops.hpp"

#include <cmath>

namespace rhgcn {

namespace {

void require_same_manifold(const LorentzPoint& a, const LorentzPoint& b, const char* op) {
  if (a.coords().size() != b.coords().size()) {
    throw DimensionError(std::string(op) + ": operands live on different manifolds");
  }
}

}  // namespace

LorentzBatch::LorentzBatch(Matrix rows, LorentzPoint origin) : rows_(std::move(rows)), origin_(std::move(origin)) {
  if (rows_.cols() != origin_.coords().size()) {
    throw DimensionError("LorentzBatch: row width does not match origin dimension");
  }
}

double LorentzBatch::max_residual() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    worst = std::max(worst, manifold_residual(rows_.row(i).transpose()));
  }
  return worst;
}

LorentzPoint lorentz_matvec(const Matrix& weight, const LorentzPoint& x, const LorentzPoint& origin) {
  require_same_manifold(x, origin, "lorentz_matvec");
  if (weight.rows() != x.coords().size() || weight.cols() != x.coords().size()) {
    throw DimensionError("lorentz_matvec: weight must be (d+1)x(d+1)");
  }
  const Vector mapped = weight * log_map(origin, x).coords();
  return exp_map(origin, project_to_tangent(origin, mapped));
}

LorentzPoint lorentz_scalar_mul(double xi, const LorentzPoint& x, const LorentzPoint& origin) {
  require_same_manifold(x, origin, "lorentz_scalar_mul");
  if (!std::isfinite(xi)) {
    throw NumericError("lorentz_scalar_mul: non-finite scale");
  }
  const TangentVector v = log_map(origin, x);
  return exp_map(origin, TangentVector::unchecked(origin, xi * v.coords()));
}

LorentzPoint lorentz_add(const LorentzPoint& x, const LorentzPoint& y, const LorentzPoint& origin) {
  require_same_manifold(x, y, "lorentz_add");
  require_same_manifold(x, origin, "lorentz_add");
  return exp_map(x, parallel_transport(origin, x, log_map(origin, y)));
}

LorentzPoint lorentz_activation(const LorentzPoint& x, const LorentzPoint& origin, const ElementwiseMap& sigma) {
  require_same_manifold(x, origin, "lorentz_activation");
  // sigma acts on coordinates of the canonical frame: T_origin is carried to T_o and back.
  const LorentzPoint o = canonical_origin(origin.dim());
  Vector t = parallel_transport(origin, o, log_map(origin, x)).coords();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    t[i] = sigma(t[i]);
  }
  const TangentVector back = parallel_transport(o, origin, project_to_tangent(o, t));
  return exp_map(origin, project_to_tangent(origin, back.coords()));
}

LorentzPoint lift_features(const Vector& features, const Tolerances& tol) {
  if (features.size() < 1) {
    throw DimensionError("lift_features: empty feature vector");
  }
  if (!features.allFinite()) {
    throw NumericError("lift_features: non-finite features");
  }
  const double norm = features.norm();
  const Eigen::Index d = features.size();
  if (norm < tol.taylor_cutoff) {
    return canonical_origin(d);
  }
  const double clipped = std::min(norm, tol.max_tangent_norm);
  Vector out(d + 1);
  out[0] = std::cosh(clipped);
  out.tail(d) = std::sinh(clipped) * features / norm;
  return LorentzPoint::unchecked(std::move(out));
}

}  // namespace rhgcn
