#include "rhgcn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rhgcn::ad {

namespace {

struct Probe {
  double value;
  std::uint64_t branches;
};

Probe evaluate(const Objective& f, const std::vector<Matrix>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.constant(p));
  const Var loss = f(tape, leaves);
  return {loss.scalar(), tape.branch_signature()};
}

}  // namespace

std::vector<Matrix> gradients(const Objective& f, const std::vector<Matrix>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Matrix& p : params) leaves.push_back(tape.parameter(p));
  const Var loss = f(tape, leaves);
  tape.backward(loss);
  std::vector<Matrix> out;
  out.reserve(leaves.size());
  for (const Var& leaf : leaves) out.push_back(tape.grad(leaf));
  return out;
}

GradCheckReport grad_check(const Objective& f, const std::vector<Matrix>& params, double h) {
  const std::vector<Matrix> analytic = gradients(f, params);
  const std::uint64_t base_branches = evaluate(f, params).branches;

  GradCheckReport report;
  std::vector<Matrix> probe = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index k = 0; k < params[p].size(); ++k) {
      const double original = params[p].data()[k];
      probe[p].data()[k] = original + h;
      const Probe plus = evaluate(f, probe);
      probe[p].data()[k] = original - h;
      const Probe minus = evaluate(f, probe);
      probe[p].data()[k] = original;

      if (plus.branches != base_branches || minus.branches != base_branches) {
        ++report.excluded;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * h);
      const double exact = analytic[p].data()[k];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double rel = std::abs(exact - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || !std::isfinite(rel)) {
        report.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
        report.worst_param = p;
        report.worst_index = k;
        report.worst_analytic = exact;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace rhgcn::ad
