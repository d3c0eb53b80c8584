#include "rhgcn/optimizer.hpp"

#include <cmath>

#include "rhgcn/error.hpp"

namespace rhgcn {

namespace {

void check_shapes(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                  const std::vector<bool>& decay) {
  if (params.size() != grads.size() || params.size() != decay.size()) {
    throw DimensionError("optimizer: parameter, gradient and decay lists differ in length");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols()) {
      throw DimensionError("optimizer: gradient shape differs from its parameter");
    }
  }
}

Matrix effective_grad(const Matrix& param, const Matrix& grad, bool decay, double weight_decay) {
  if (decay && weight_decay != 0.0) return grad + weight_decay * param;
  return grad;
}

class Sgd final : public Optimizer {
 public:
  explicit Sgd(const OptimizerConfig& c) : c_(c) {}

  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
            const std::vector<bool>& decay) override {
    check_shapes(params, grads, decay);
    if (velocity_.empty()) {
      for (const Matrix* p : params) velocity_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix g = effective_grad(*params[i], grads[i], decay[i], c_.weight_decay);
      velocity_[i] = c_.momentum * velocity_[i] + g;
      *params[i] -= c_.lr * velocity_[i];
    }
  }

 private:
  OptimizerConfig c_;
  std::vector<Matrix> velocity_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(const OptimizerConfig& c) : c_(c) {}

  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
            const std::vector<bool>& decay) override {
    check_shapes(params, grads, decay);
    if (m_.empty()) {
      for (const Matrix* p : params) {
        m_.push_back(Matrix::Zero(p->rows(), p->cols()));
        v_.push_back(Matrix::Zero(p->rows(), p->cols()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(c_.beta1, t_);
    const double c2 = 1.0 - std::pow(c_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix g = effective_grad(*params[i], grads[i], decay[i], c_.weight_decay);
      m_[i] = c_.beta1 * m_[i] + (1.0 - c_.beta1) * g;
      v_[i] = c_.beta2 * v_[i] + (1.0 - c_.beta2) * g.cwiseProduct(g);
      const Matrix mhat = m_[i] / c1;
      const Matrix vhat = v_[i] / c2;
      *params[i] -= (c_.lr * mhat.array() / (vhat.array().sqrt() + c_.eps)).matrix();
    }
  }

 private:
  OptimizerConfig c_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int t_ = 0;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config) {
  if (config.name == "adam") return std::make_unique<Adam>(config);
  if (config.name == "sgd") return std::make_unique<Sgd>(config);
  throw ConfigError("unknown optimizer '" + config.name + "'");
}

}  // namespace rhgcn
