#pragma once

// Lorentz-space counterparts of the linear-layer building blocks. Each one maps
// through the tangent space of a reference origin, so every function takes that
// origin explicitly (product components each carry their own).

#include <functional>

#include <Eigen/Core>

#include "rhgcn/lorentz.hpp"

namespace rhgcn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n points of one Lorentz component, stored row-wise, with the component's origin.
class LorentzBatch {
 public:
  LorentzBatch(Matrix rows, LorentzPoint origin);

  const Matrix& rows() const noexcept { return rows_; }
  const LorentzPoint& origin() const noexcept { return origin_; }
  Eigen::Index size() const noexcept { return rows_.rows(); }
  Eigen::Index dim() const noexcept { return rows_.cols() - 1; }
  LorentzPoint row(Eigen::Index i) const { return LorentzPoint::unchecked(rows_.row(i).transpose()); }

  /// Largest |<x,x>_L + 1| over the rows.
  double max_residual() const;

 private:
  Matrix rows_;
  LorentzPoint origin_;
};

using ElementwiseMap = std::function<double(double)>;

/// W (x) x = exp_o(proj_o(W log_o(x))).
LorentzPoint lorentz_matvec(const Matrix& weight, const LorentzPoint& x, const LorentzPoint& origin);

/// xi (.) x = exp_o(xi log_o(x)).
LorentzPoint lorentz_scalar_mul(double xi, const LorentzPoint& x, const LorentzPoint& origin);

/// x (+) y = exp_x(P_{o->x}(log_o(y))).
LorentzPoint lorentz_add(const LorentzPoint& x, const LorentzPoint& y, const LorentzPoint& origin);

/// sigma_L(x) = exp_o(proj_o(sigma(log_o(x)))), sigma applied per coordinate of the
/// canonical frame: log_o(x) is transported to the canonical origin, mapped, projected
/// and transported back. At the canonical origin this is the plain coordinatewise form.
LorentzPoint lorentz_activation(const LorentzPoint& x, const LorentzPoint& origin, const ElementwiseMap& sigma);

/// Lifts a Euclidean feature row to L^d through the canonical origin: exp_o([0, X_i]).
LorentzPoint lift_features(const Vector& features, const Tolerances& tol = default_tolerances());

}  // namespace rhgcn
