#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rhgcn/manifold_ops.hpp"

namespace rhgcn {

struct OptimizerConfig {
  std::string name = "adam";  // "adam" or "sgd"
  double lr = 0.01;
  double weight_decay = 0.0;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Full-batch first-order optimizer. Weight decay is added to the gradient
/// (L2 penalty) only for tensors whose decay flag is set.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                    const std::vector<bool>& decay) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config);

}  // namespace rhgcn
