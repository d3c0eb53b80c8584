#include "rhgcn/product.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace rhgcn {

namespace {

long parse_positive(const std::string& token, const std::string& whole) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || value < 1) {
    throw ConfigError("bad signature '" + whole + "': expected dxm groups with positive integers");
  }
  return value;
}

}  // namespace

std::vector<SignatureGroup> parse_signature(const std::string& text) {
  std::vector<SignatureGroup> groups;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto x = item.find_first_of("xX");
    if (x == std::string::npos) {
      throw ConfigError("bad signature '" + text + "': group '" + item + "' lacks 'x'");
    }
    groups.push_back({parse_positive(item.substr(0, x), text),
                      static_cast<int>(parse_positive(item.substr(x + 1), text))});
  }
  if (groups.empty()) {
    throw ConfigError("empty product signature");
  }
  return groups;
}

std::string format_signature(const std::vector<SignatureGroup>& groups) {
  std::string out;
  for (const auto& g : groups) {
    if (!out.empty()) out += ",";
    out += std::to_string(g.dim) + "x" + std::to_string(g.count);
  }
  return out;
}

Eigen::Index ProductSpec::ambient_width() const {
  Eigen::Index width = 0;
  for (const auto& c : components) width += c.dim + 1;
  return width;
}

std::string ProductSpec::display_name() const { return "P-HGCN_[" + format_signature(signature) + "]"; }

ProductSpec build_product(const std::vector<SignatureGroup>& signature, std::uint64_t seed, double origin_radius) {
  if (signature.empty()) {
    throw ConfigError("build_product: empty signature");
  }
  if (!(origin_radius >= 0.0) || !std::isfinite(origin_radius)) {
    throw ConfigError("build_product: origin_radius must be finite and >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProductSpec spec{signature, {}, seed, origin_radius};
  for (const auto& group : signature) {
    if (group.dim < 1 || group.count < 1) {
      throw ConfigError("build_product: dimensions and counts must be >= 1");
    }
    for (int c = 0; c < group.count; ++c) {
      const LorentzPoint canonical = canonical_origin(group.dim);
      Vector dir = Vector::Zero(group.dim + 1);
      // Redraw on the (measure-zero) all-zero sample.
      while (dir.tail(group.dim).norm() == 0.0) {
        for (Eigen::Index i = 1; i <= group.dim; ++i) dir[i] = normal(rng);
      }
      dir *= origin_radius / dir.norm();
      spec.components.push_back({group.dim, exp_map(canonical, TangentVector::unchecked(canonical, dir))});
    }
  }
  return spec;
}

ProductSpec product_from_origins(const std::vector<SignatureGroup>& signature, std::vector<LorentzPoint> origins,
                                 std::uint64_t seed, double origin_radius) {
  ProductSpec spec{signature, {}, seed, origin_radius};
  std::size_t next = 0;
  for (const auto& group : signature) {
    for (int c = 0; c < group.count; ++c, ++next) {
      if (next >= origins.size() || origins[next].dim() != group.dim) {
        throw DimensionError("stored origins do not match the signature");
      }
      spec.components.push_back({group.dim, origins[next]});
    }
  }
  if (next != origins.size()) {
    throw DimensionError("stored origins do not match the signature");
  }
  return spec;
}

ProductPoint product_exp(const ProductPoint& x, const ProductTangent& v) {
  if (x.parts.size() != v.size()) {
    throw DimensionError("product_exp: component count mismatch");
  }
  ProductPoint out;
  out.parts.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    out.parts.push_back(exp_map(x.parts[j], v[j]));
  }
  return out;
}

ProductTangent product_log(const ProductPoint& x, const ProductPoint& y) {
  if (x.parts.size() != y.parts.size()) {
    throw DimensionError("product_log: component count mismatch");
  }
  ProductTangent out;
  out.reserve(x.parts.size());
  for (std::size_t j = 0; j < x.parts.size(); ++j) {
    out.push_back(log_map(x.parts[j], y.parts[j]));
  }
  return out;
}

std::vector<LorentzBatch> lift_to_product(const Matrix& features, const ProductSpec& spec,
                                          const std::vector<Matrix>& input_maps) {
  if (input_maps.size() != spec.size()) {
    throw DimensionError("lift_to_product: need one input map per component");
  }
  std::vector<LorentzBatch> out;
  out.reserve(spec.size());
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const auto& comp = spec.components[j];
    const Matrix& map = input_maps[j];
    if (map.rows() != comp.dim || map.cols() != features.cols()) {
      throw DimensionError("lift_to_product: input map " + std::to_string(j) + " must be " +
                           std::to_string(comp.dim) + "x" + std::to_string(features.cols()));
    }
    const LorentzPoint canonical = canonical_origin(comp.dim);
    Matrix rows(features.rows(), comp.dim + 1);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      Vector tangent = Vector::Zero(comp.dim + 1);
      tangent.tail(comp.dim) = map * features.row(i).transpose();
      const TangentVector moved =
          parallel_transport(canonical, comp.origin, TangentVector::unchecked(canonical, std::move(tangent)));
      rows.row(i) = exp_map(comp.origin, moved).coords().transpose();
    }
    out.emplace_back(std::move(rows), comp.origin);
  }
  return out;
}

}  // namespace rhgcn
