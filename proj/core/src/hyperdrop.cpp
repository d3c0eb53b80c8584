#include <algorithm>
#include <cmath>

#include "rhgcn/model.hpp"

namespace rhgcn {

double draw_noise(const NoiseSpec& noise, std::mt19937_64& rng) {
  noise.validate();
  if (noise.drop_rate == 0.0) return 1.0;
  std::normal_distribution<double> dist(1.0, std::sqrt(noise.variance()));
  const double xi = dist(rng);
  return noise.clamp_nonnegative ? std::max(xi, 0.0) : xi;
}

Matrix sample_noise(const NoiseSpec& noise, Eigen::Index rows, std::mt19937_64& rng) {
  const Eigen::Index n = noise.granularity == NoiseGranularity::per_component ? 1 : rows;
  Matrix xi(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) xi(i, 0) = draw_noise(noise, rng);
  return xi;
}

LorentzPoint hyperdrop(const LorentzPoint& row, const NoiseSpec& noise, std::mt19937_64& rng, bool training,
                       const LorentzPoint& origin) {
  if (!training) return row;
  return lorentz_scalar_mul(draw_noise(noise, rng), row, origin);
}

}  // namespace rhgcn
