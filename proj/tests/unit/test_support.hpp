#pragma once

// Random generators and a textbook-formula reference implementation of the
// Lorentz maps. The reference uses the plain closed forms (arcosh, cosh/sinh,
// log-based transport) and shares no code with the library.

#include <cmath>
#include <random>

#include "rhgcn/lorentz.hpp"
#include "rhgcn/manifold_ops.hpp"

namespace rhgcn::testsupport {

inline double ref_inner(const Vector& u, const Vector& v) {
  double s = -u[0] * v[0];
  for (Eigen::Index i = 1; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline Vector ref_origin(Eigen::Index d) {
  Vector o = Vector::Zero(d + 1);
  o[0] = 1.0;
  return o;
}

inline Vector ref_exp(const Vector& x, const Vector& v) {
  const double n = std::sqrt(std::max(ref_inner(v, v), 0.0));
  if (n == 0.0) return x;
  return std::cosh(n) * x + std::sinh(n) * v / n;
}

inline Vector ref_log(const Vector& x, const Vector& y) {
  const double ip = ref_inner(x, y);
  const double a = std::max(-ip, 1.0);
  if (a == 1.0) return Vector::Zero(x.size());
  return std::acosh(a) / std::sqrt(ip * ip - 1.0) * (y + ip * x);
}

inline double ref_dist(const Vector& x, const Vector& y) { return std::acosh(std::max(-ref_inner(x, y), 1.0)); }

inline Vector ref_transport(const Vector& x, const Vector& y, const Vector& v) {
  const double d = ref_dist(x, y);
  if (d == 0.0) return v;
  const Vector lxy = ref_log(x, y);
  const Vector lyx = ref_log(y, x);
  return v - ref_inner(lxy, v) / (d * d) * (lxy + lyx);
}

inline Vector ref_tangent_proj(const Vector& x, const Vector& raw) { return raw + ref_inner(x, raw) * x; }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Vector gaussian(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix gaussian(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    }
    return m;
  }

  /// Tangent vector at x with Lorentz norm exactly `norm` (random direction).
  TangentVector tangent(const LorentzPoint& x, double norm) {
    Vector raw = gaussian(x.coords().size());
    Vector t = ref_tangent_proj(x.coords(), raw);
    const double n = std::sqrt(std::max(ref_inner(t, t), 0.0));
    if (n == 0.0) return TangentVector::zero(x);
    return TangentVector::unchecked(x, t * (norm / n));
  }

  /// Point at geodesic distance r from the canonical origin, random direction.
  LorentzPoint point(Eigen::Index d, double r) {
    Vector dir = gaussian(d);
    dir.normalize();
    Vector p(d + 1);
    p[0] = std::cosh(r);
    p.tail(d) = std::sinh(r) * dir;
    return LorentzPoint::unchecked(p);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rhgcn::testsupport
