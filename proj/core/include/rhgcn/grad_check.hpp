#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rhgcn/autodiff.hpp"

namespace rhgcn::ad {

/// Builds a scalar loss on the given tape from parameter leaves (same order as the
/// parameter list). Must be deterministic.
using Objective = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +-h probes crossed a relu/clamp kink; compared to nothing.
  std::size_t excluded = 0;
  std::size_t worst_param = 0;
  Eigen::Index worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Central differences (f(t + h e) - f(t - h e)) / 2h against reverse-mode
/// gradients, coordinate by coordinate. Relative error uses the denominator
/// max(|analytic|, |numeric|, 1e-8). A coordinate is excluded when either probe
/// takes a different piecewise branch than the unperturbed evaluation.
GradCheckReport grad_check(const Objective& f, const std::vector<Matrix>& params, double h = 1e-5);

/// Reverse-mode gradients of f at params.
std::vector<Matrix> gradients(const Objective& f, const std::vector<Matrix>& params);

}  // namespace rhgcn::ad
