#include <cmath>

#include "doctest.h"
#include "rhgcn/model.hpp"
#include "test_support.hpp"

using namespace rhgcn;
using rhgcn::testsupport::Rng;

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments sample_moments(const NoiseSpec& noise, int draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double xi = draw_noise(noise, rng);
    s += xi;
    s2 += xi * xi;
  }
  const double mean = s / draws;
  return {mean, (s2 - draws * mean * mean) / (draws - 1)};
}

}  // namespace

TEST_SUITE("hyperdrop") {
  TEST_CASE("noise statistics") {
    for (double eta : {0.1, 0.3, 0.5}) {
      NoiseSpec noise;
      noise.drop_rate = eta;
      const double var = eta / (1.0 - eta);
      CHECK(noise.variance() == doctest::Approx(var));
      const auto m = sample_moments(noise, 100000, 17);
      CHECK(std::abs(m.mean - 1.0) < 0.02);
      CHECK(std::abs(m.variance - var) < 0.05 * var);
    }
  }

  TEST_CASE("zero rate and evaluation mode are identities") {
    Rng rng(1);
    std::mt19937_64 gen(2);
    const auto origin = rng.point(3, 0.9);
    const auto x = rng.point(3, 1.4);
    NoiseSpec off;
    CHECK(draw_noise(off, gen) == 1.0);
    CHECK((hyperdrop(x, off, gen, true, origin).coords() - x.coords()).norm() < 1e-10);
    NoiseSpec on;
    on.drop_rate = 0.5;
    CHECK(hyperdrop(x, on, gen, false, origin).coords() == x.coords());
  }

  TEST_CASE("training mode scales along the geodesic from the origin") {
    Rng rng(3);
    const auto origin = rng.point(2, 0.5);
    const auto x = rng.point(2, 1.0);
    NoiseSpec noise;
    noise.drop_rate = 0.4;
    std::mt19937_64 a(7), b(7);
    const auto y = hyperdrop(x, noise, a, true, origin);
    const double xi = draw_noise(noise, b);
    CHECK((y.coords() - lorentz_scalar_mul(xi, x, origin).coords()).norm() < 1e-12);
    CHECK(on_manifold(y.coords()));
  }

  TEST_CASE("clamped noise is nonnegative") {
    NoiseSpec noise;
    noise.drop_rate = 0.8;
    noise.clamp_nonnegative = true;
    std::mt19937_64 rng(4);
    bool saw_zero = false;
    for (int i = 0; i < 10000; ++i) {
      const double xi = draw_noise(noise, rng);
      CHECK(xi >= 0.0);
      saw_zero = saw_zero || xi == 0.0;
    }
    CHECK(saw_zero);
  }

  TEST_CASE("granularity shapes") {
    NoiseSpec noise;
    noise.drop_rate = 0.2;
    std::mt19937_64 rng(5);
    CHECK(sample_noise(noise, 7, rng).rows() == 7);
    noise.granularity = NoiseGranularity::per_component;
    const Matrix one = sample_noise(noise, 7, rng);
    CHECK(one.rows() == 1);
    CHECK(one.cols() == 1);
  }

  TEST_CASE("rate validation") {
    NoiseSpec noise;
    noise.drop_rate = -0.1;
    CHECK_THROWS_AS(noise.validate(), ConfigError);
    noise.drop_rate = 1.0;
    CHECK_THROWS_AS(noise.validate(), ConfigError);
    noise.drop_rate = 0.99;
    CHECK_NOTHROW(noise.validate());
  }
}
