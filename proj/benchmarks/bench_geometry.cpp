#include <random>

#include <benchmark/benchmark.h>

#include "rhgcn/batch_geometry.hpp"
#include "rhgcn/lorentz.hpp"

namespace {

using namespace rhgcn;

LorentzPoint random_point(std::mt19937_64& rng, Eigen::Index d, double r) {
  std::normal_distribution<double> normal;
  Vector dir(d);
  for (Eigen::Index i = 0; i < d; ++i) dir[i] = normal(rng);
  dir.normalize();
  Vector p(d + 1);
  p[0] = std::cosh(r);
  p.tail(d) = std::sinh(r) * dir;
  return LorentzPoint::unchecked(p);
}

void BM_ExpLog(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Eigen::Index d = state.range(0);
  const auto x = random_point(rng, d, 1.0);
  const auto y = random_point(rng, d, 1.5);
  for (auto _ : state) {
    const auto v = log_map(x, y);
    benchmark::DoNotOptimize(exp_map(x, v));
  }
}
BENCHMARK(BM_ExpLog)->Arg(2)->Arg(16)->Arg(64);

void BM_Transport(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::Index d = state.range(0);
  const auto x = random_point(rng, d, 1.0);
  const auto y = random_point(rng, d, 1.5);
  const auto v = log_map(x, random_point(rng, d, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(parallel_transport(x, y, v));
}
BENCHMARK(BM_Transport)->Arg(2)->Arg(16)->Arg(64);

void BM_BatchLogExp(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Eigen::Index n = state.range(0);
  const Eigen::Index d = 16;
  Matrix rows(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) rows.row(i) = random_point(rng, d, 1.0).coords().transpose();
  const auto origin = random_point(rng, d, 0.5);
  for (auto _ : state) {
    ad::Tape tape;
    const ad::Var o = ad::origin_row(tape, origin);
    benchmark::DoNotOptimize(ad::exp_map(o, ad::log_map(o, tape.constant(rows))).value());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BatchLogExp)->Arg(64)->Arg(1024)->Arg(4096);

}  // namespace
