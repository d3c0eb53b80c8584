#pragma once

// Residual hyperbolic graph convolutional network on a product of Lorentz
// components.
//
// Per layer l and component j (all operations at the component origin o_j):
//
//   Hbar = ((1 - alpha_l) (.) (P (x) H)) (+) (alpha_l (.) H0)
//   H'   = sigma_L(((1 - beta_l) I + beta_l W_l^j) (x) Hbar)
//
// followed, during training, by HyperDrop: row i becomes xi_i^j (.) H'_i with
// xi ~ N(1, eta / (1 - eta)). The head maps every component to T_{o_j},
// concatenates the tangent coordinates and applies an affine layer + log-softmax.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rhgcn/batch_geometry.hpp"
#include "rhgcn/graph.hpp"
#include "rhgcn/product.hpp"

namespace rhgcn {

using ad::Activation;

enum class NoiseGranularity { per_node_component, per_component };

struct NoiseSpec {
  double drop_rate = 0.0;
  NoiseGranularity granularity = NoiseGranularity::per_node_component;
  bool clamp_nonnegative = false;

  /// eta / (1 - eta).
  double variance() const;
  void validate() const;
};

struct ModelConfig {
  ProductSpec product;
  int layers = 2;
  double alpha = 0.1;
  double beta_base = 0.5;
  NoiseSpec noise;
  Activation activation = Activation::relu;
  Eigen::Index input_dim = 0;
  int num_classes = 0;
  Tolerances tol;

  /// beta_l = ln(1 + beta_base / l), l >= 1.
  double beta_at(int layer) const;
  void validate() const;
};

struct LayerParams {
  std::vector<Matrix> weights;  // one (d_j+1)x(d_j+1) matrix per component
  double alpha = 0.0;
  double beta = 0.0;
};

struct ModelParams {
  std::vector<Matrix> input_maps;  // d_j x input_dim
  std::vector<LayerParams> layers;
  Matrix classifier;  // ambient_width x classes
  Matrix bias;        // 1 x classes

  /// Glorot-uniform maps and weights, zero bias; alpha/beta from the config schedule.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  /// Trainable tensors in a fixed order: input maps, layer weights (layer-major), classifier, bias.
  std::vector<Matrix*> trainable();
  std::vector<const Matrix*> trainable() const;
  /// Parallel to trainable(): true for the graph-convolution weights W.
  std::vector<bool> weight_decay_mask() const;
  std::vector<std::string> trainable_names() const;
};

/// Parameter nodes of one forward pass.
struct BoundParams {
  std::vector<ad::Var> input_maps;
  std::vector<std::vector<ad::Var>> weights;  // [layer][component]
  ad::Var classifier;
  ad::Var bias;
};

/// Binds every trainable tensor as a gradient leaf (or constant when requires_grad is false).
BoundParams bind_parameters(ad::Tape& tape, const ModelParams& params, bool requires_grad);
/// Reassembles leaves given in trainable() order.
BoundParams bind_leaves(const ModelParams& shape, std::span<const ad::Var> leaves);

struct ForwardOptions {
  bool training = false;
  std::mt19937_64* rng = nullptr;  // required when training with drop_rate > 0
  bool record_states = false;
};

struct ForwardResult {
  ad::Var log_probs;
  /// With record_states: states[l][j] = H^{j,(l)} rows for l = 0..L.
  std::vector<std::vector<Matrix>> states;
};

/// Lifts features into every component (differentiable in the input maps).
std::vector<ad::Var> lift_initial(ad::Tape& tape, const ModelConfig& config, const BoundParams& params,
                                  const Matrix& features);

/// One residual hyperbolic graph convolution on component rows H with initial rows H0.
ad::Var hgc_layer(const ad::Var& h, const ad::Var& h0, const SparseGraph& graph, const ad::Var& weight,
                  double alpha, double beta, const ad::Var& origin, Activation act);

ForwardResult forward(ad::Tape& tape, const ModelConfig& config, const ModelParams& params, const BoundParams& bound,
                      const Matrix& features, const SparseGraph& graph, const ForwardOptions& options = {});

/// Evaluation-mode forward without gradients; returns n x classes log-probabilities.
Matrix predict(const ModelConfig& config, const ModelParams& params, const Matrix& features, const SparseGraph& graph);

/// Mean negative log-likelihood over idx. Throws UsageError on an empty index set.
ad::Var loss(const ad::Var& log_probs, std::span<const int> labels, std::span<const int> idx);

double accuracy(const Matrix& log_probs, std::span<const int> labels, std::span<const int> idx);

// HyperDrop

/// One multiplicative factor xi ~ N(1, eta / (1 - eta)), optionally clamped at 0.
double draw_noise(const NoiseSpec& noise, std::mt19937_64& rng);
/// Factors for one component: n x 1 (per node) or 1 x 1 (per component).
Matrix sample_noise(const NoiseSpec& noise, Eigen::Index rows, std::mt19937_64& rng);
/// xi (.) row in training mode, the row unchanged otherwise.
LorentzPoint hyperdrop(const LorentzPoint& row, const NoiseSpec& noise, std::mt19937_64& rng, bool training,
                       const LorentzPoint& origin);

std::string activation_name(Activation act);
Activation parse_activation(const std::string& name);
std::string granularity_name(NoiseGranularity g);
NoiseGranularity parse_granularity(const std::string& name);

}  // namespace rhgcn
