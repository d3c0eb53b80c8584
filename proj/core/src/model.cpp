#include "rhgcn/model.hpp"

#include <array>
#include <cmath>

#include "rhgcn/error.hpp"

namespace rhgcn {

using ad::Tape;
using ad::Var;

double NoiseSpec::variance() const { return drop_rate / (1.0 - drop_rate); }

void NoiseSpec::validate() const {
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ConfigError("drop_rate must lie in [0, 1)");
}

double ModelConfig::beta_at(int layer) const {
  if (layer < 1) throw UsageError("beta_at: layers are numbered from 1");
  return std::log(1.0 + beta_base / layer);
}

void ModelConfig::validate() const {
  if (product.size() == 0) throw ConfigError("model needs at least one product component");
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(beta_base >= 0.0) || !std::isfinite(beta_base)) throw ConfigError("beta_base must be finite and >= 0");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  noise.validate();
  tol.validate();
}

namespace {

Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  for (const auto& c : config.product.components) p.input_maps.push_back(glorot(c.dim, config.input_dim, rng));
  for (int l = 1; l <= config.layers; ++l) {
    LayerParams layer;
    layer.alpha = config.alpha;
    layer.beta = config.beta_at(l);
    for (const auto& c : config.product.components) layer.weights.push_back(glorot(c.dim + 1, c.dim + 1, rng));
    p.layers.push_back(std::move(layer));
  }
  p.classifier = glorot(config.product.ambient_width(), config.num_classes, rng);
  p.bias = Matrix::Zero(1, config.num_classes);
  return p;
}

std::vector<Matrix*> ModelParams::trainable() {
  std::vector<Matrix*> out;
  for (auto& m : input_maps) out.push_back(&m);
  for (auto& layer : layers) {
    for (auto& w : layer.weights) out.push_back(&w);
  }
  out.push_back(&classifier);
  out.push_back(&bias);
  return out;
}

std::vector<const Matrix*> ModelParams::trainable() const {
  std::vector<const Matrix*> out;
  for (const auto& m : input_maps) out.push_back(&m);
  for (const auto& layer : layers) {
    for (const auto& w : layer.weights) out.push_back(&w);
  }
  out.push_back(&classifier);
  out.push_back(&bias);
  return out;
}

std::vector<bool> ModelParams::weight_decay_mask() const {
  std::vector<bool> mask(input_maps.size(), false);
  for (const auto& layer : layers) mask.insert(mask.end(), layer.weights.size(), true);
  mask.push_back(false);
  mask.push_back(false);
  return mask;
}

std::vector<std::string> ModelParams::trainable_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < input_maps.size(); ++j) names.push_back("input_map." + std::to_string(j));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t j = 0; j < layers[l].weights.size(); ++j) {
      names.push_back("layer." + std::to_string(l + 1) + ".W." + std::to_string(j));
    }
  }
  names.push_back("classifier");
  names.push_back("bias");
  return names;
}

BoundParams bind_parameters(Tape& tape, const ModelParams& params, bool requires_grad) {
  std::vector<Var> leaves;
  for (const Matrix* m : params.trainable()) {
    leaves.push_back(requires_grad ? tape.parameter(*m) : tape.constant(*m));
  }
  return bind_leaves(params, leaves);
}

BoundParams bind_leaves(const ModelParams& shape, std::span<const Var> leaves) {
  std::size_t expected = shape.input_maps.size() + 2;
  for (const auto& layer : shape.layers) expected += layer.weights.size();
  if (leaves.size() != expected) throw DimensionError("bind_leaves: wrong number of parameter nodes");
  BoundParams b;
  std::size_t k = 0;
  for (std::size_t j = 0; j < shape.input_maps.size(); ++j) b.input_maps.push_back(leaves[k++]);
  for (const auto& layer : shape.layers) {
    std::vector<Var> ws;
    for (std::size_t j = 0; j < layer.weights.size(); ++j) ws.push_back(leaves[k++]);
    b.weights.push_back(std::move(ws));
  }
  b.classifier = leaves[k++];
  b.bias = leaves[k++];
  return b;
}

std::vector<Var> lift_initial(Tape& tape, const ModelConfig& config, const BoundParams& params,
                              const Matrix& features) {
  if (features.cols() != config.input_dim) throw DimensionError("features do not match input_dim");
  const Var x = tape.constant(features);
  const Var zeros = tape.constant(Matrix::Zero(features.rows(), 1));
  std::vector<Var> out;
  for (std::size_t j = 0; j < config.product.size(); ++j) {
    const auto& comp = config.product.components[j];
    const Var z = ad::matmul(x, ad::transpose(params.input_maps[j]));
    const std::array<Var, 2> parts{zeros, z};
    const Var tangent = ad::concat_cols(parts);
    const Var source = ad::origin_row(tape, canonical_origin(comp.dim));
    const Var origin = ad::origin_row(tape, comp.origin);
    out.push_back(ad::exp_map(origin, ad::parallel_transport(source, origin, tangent), config.tol));
  }
  return out;
}

Var hgc_layer(const Var& h, const Var& h0, const SparseGraph& graph, const Var& weight, double alpha, double beta,
              const Var& origin, Activation act) {
  Var hbar = ad::lorentz_aggregate(graph.adj_norm(), h, origin);
  if (alpha != 0.0) {
    hbar = ad::lorentz_add(ad::lorentz_scalar_mul(1.0 - alpha, hbar, origin),
                           ad::lorentz_scalar_mul(alpha, h0, origin), origin);
  }
  Tape& tape = *h.tape();
  const Var mixed = ad::add(tape.constant(Matrix::Identity(weight.rows(), weight.cols()) * (1.0 - beta)),
                            ad::scale(weight, beta));
  return ad::lorentz_activation(ad::lorentz_matvec(mixed, hbar, origin), origin, act);
}

ForwardResult forward(Tape& tape, const ModelConfig& config, const ModelParams& params, const BoundParams& bound,
                      const Matrix& features, const SparseGraph& graph, const ForwardOptions& options) {
  if (features.rows() != graph.num_nodes()) throw DimensionError("features do not match graph size");
  const bool drop = options.training && config.noise.drop_rate > 0.0;
  if (drop && options.rng == nullptr) throw UsageError("training with HyperDrop needs an rng");

  ForwardResult result;
  const std::size_t k = config.product.size();
  std::vector<Var> origins;
  for (const auto& c : config.product.components) origins.push_back(ad::origin_row(tape, c.origin));

  const std::vector<Var> h0 = lift_initial(tape, config, bound, features);
  std::vector<Var> h = h0;
  auto record = [&] {
    if (!options.record_states) return;
    std::vector<Matrix> snapshot;
    for (const auto& v : h) snapshot.push_back(v.value());
    result.states.push_back(std::move(snapshot));
  };
  record();

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    for (std::size_t j = 0; j < k; ++j) {
      h[j] = hgc_layer(h[j], h0[j], graph, bound.weights[l][j], layer.alpha, layer.beta, origins[j],
                       config.activation);
      if (drop) {
        const Var xi = tape.constant(sample_noise(config.noise, h[j].rows(), *options.rng));
        h[j] = ad::lorentz_scalar_mul(xi, h[j], origins[j]);
      }
    }
    record();
  }

  std::vector<Var> tangents;
  for (std::size_t j = 0; j < k; ++j) tangents.push_back(ad::log_map(origins[j], h[j]));
  const Var feats = ad::concat_cols(tangents);
  result.log_probs = ad::log_softmax(ad::add(ad::matmul(feats, bound.classifier), bound.bias));
  return result;
}

Matrix predict(const ModelConfig& config, const ModelParams& params, const Matrix& features,
               const SparseGraph& graph) {
  Tape tape;
  const BoundParams bound = bind_parameters(tape, params, false);
  return forward(tape, config, params, bound, features, graph).log_probs.value();
}

Var loss(const Var& log_probs, std::span<const int> labels, std::span<const int> idx) {
  return ad::nll_loss(log_probs, labels, idx);
}

double accuracy(const Matrix& log_probs, std::span<const int> labels, std::span<const int> idx) {
  if (idx.empty()) return 0.0;
  std::size_t correct = 0;
  for (int i : idx) {
    Eigen::Index best = 0;
    log_probs.row(i).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

std::string activation_name(Activation act) { return act == Activation::relu ? "relu" : "identity"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "' (expected relu or identity)");
}

std::string granularity_name(NoiseGranularity g) {
  return g == NoiseGranularity::per_component ? "per_component" : "per_node_component";
}

NoiseGranularity parse_granularity(const std::string& name) {
  if (name == "per_node_component") return NoiseGranularity::per_node_component;
  if (name == "per_component") return NoiseGranularity::per_component;
  throw ConfigError("unknown noise granularity '" + name + "'");
}

}  // namespace rhgcn
