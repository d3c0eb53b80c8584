#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhgcn/manifold_ops.hpp"

namespace rhgcn {

/// One "d x m" group of a product signature: m copies of L^d.
struct SignatureGroup {
  Eigen::Index dim = 0;
  int count = 0;

  friend bool operator==(const SignatureGroup&, const SignatureGroup&) = default;
};

/// Parses "dxm[,dxm...]", e.g. "2x8" or "16x1,4x2". Throws ConfigError.
std::vector<SignatureGroup> parse_signature(const std::string& text);
std::string format_signature(const std::vector<SignatureGroup>& groups);

struct ProductComponent {
  Eigen::Index dim;
  LorentzPoint origin;
};

struct ProductSpec {
  std::vector<SignatureGroup> signature;
  std::vector<ProductComponent> components;
  std::uint64_t seed = 0;
  double origin_radius = 1.0;

  std::size_t size() const noexcept { return components.size(); }
  /// Sum over components of (d_j + 1): the width of concatenated tangent features.
  Eigen::Index ambient_width() const;
  /// Model name in the usual table form, e.g. "P-HGCN_[2x8]".
  std::string display_name() const;
};

/// Builds the product with origins o_j = exp_o(r_j), r_j a seeded uniform direction in
/// T_o scaled to Lorentz norm origin_radius. Deterministic in (signature, seed, radius).
ProductSpec build_product(const std::vector<SignatureGroup>& signature, std::uint64_t seed, double origin_radius);

/// Rebuilds a spec from stored origins (checkpoints).
ProductSpec product_from_origins(const std::vector<SignatureGroup>& signature, std::vector<LorentzPoint> origins,
                                 std::uint64_t seed, double origin_radius);

struct ProductPoint {
  std::vector<LorentzPoint> parts;
};

using ProductTangent = std::vector<TangentVector>;

ProductPoint product_exp(const ProductPoint& x, const ProductTangent& v);
ProductTangent product_log(const ProductPoint& x, const ProductPoint& y);

/// Per component j and node i: z = maps[j] X_i, H_i = exp_{o_j}(P_{o->o_j}([0, z])).
std::vector<LorentzBatch> lift_to_product(const Matrix& features, const ProductSpec& spec,
                                          const std::vector<Matrix>& input_maps);

}  // namespace rhgcn
