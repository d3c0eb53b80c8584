#include "rhgcn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rhgcn/error.hpp"

namespace rhgcn {

using nlohmann::json;

const char* artifact_version() { return "rhgcn " RHGCN_VERSION; }

namespace {

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw FormatError("checkpoint: tensor '" + what + "' has inconsistent size");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& v = data[static_cast<std::size_t>(i * cols + k)];
      if (!v.is_number()) throw FormatError("checkpoint: tensor '" + what + "' holds a non-number");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) throw FormatError("checkpoint: tensor '" + what + "' has wrong shape");
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  json j;
  j["format"] = "rhgcn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["artifact"] = artifact_version();
  j["epoch"] = c.epoch;

  json run = json::object();
  for (const auto& [k, v] : c.run.entries()) run[k] = v;
  j["run_config"] = run;

  const ModelConfig& m = c.model;
  json origins = json::array();
  for (const auto& comp : m.product.components) {
    json o = json::array();
    for (Eigen::Index i = 0; i < comp.origin.coords().size(); ++i) o.push_back(comp.origin.coords()(i));
    origins.push_back(o);
  }
  j["model"] = {{"signature", format_signature(m.product.signature)},
                {"product_seed", m.product.seed},
                {"origin_radius", m.product.origin_radius},
                {"origins", origins},
                {"layers", m.layers},
                {"alpha", m.alpha},
                {"beta_base", m.beta_base},
                {"drop_rate", m.noise.drop_rate},
                {"noise_granularity", granularity_name(m.noise.granularity)},
                {"noise_clamp", m.noise.clamp_nonnegative},
                {"activation", activation_name(m.activation)},
                {"input_dim", m.input_dim},
                {"num_classes", m.num_classes},
                {"tolerances",
                 {{"manifold_eps", m.tol.manifold_eps},
                  {"arcosh_clamp", m.tol.arcosh_clamp},
                  {"taylor_cutoff", m.tol.taylor_cutoff},
                  {"max_tangent_norm", m.tol.max_tangent_norm}}}};

  json layers = json::array();
  for (const auto& l : c.params.layers) layers.push_back({{"alpha", l.alpha}, {"beta", l.beta}});
  j["layer_coefficients"] = layers;

  json params = json::object();
  const auto names = c.params.trainable_names();
  const auto tensors = c.params.trainable();
  for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = matrix_json(*tensors[i]);
  j["params"] = params;
  return j.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "rhgcn-checkpoint") {
      throw FormatError("checkpoint: not an rhgcn checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported version " + j.at("version").dump());
    }
    Checkpoint c;
    c.epoch = j.at("epoch").get<int>();
    for (const auto& [k, v] : j.at("run_config").items()) c.run.set(k, v.get<std::string>());

    const json& m = j.at("model");
    ModelConfig& cfg = c.model;
    const auto signature = parse_signature(m.at("signature").get<std::string>());
    std::vector<LorentzPoint> origins;
    for (const auto& o : m.at("origins")) {
      Vector v(static_cast<Eigen::Index>(o.size()));
      for (std::size_t i = 0; i < o.size(); ++i) v(static_cast<Eigen::Index>(i)) = o[i].get<double>();
      origins.push_back(LorentzPoint::from_ambient(v));
    }
    cfg.product = product_from_origins(signature, std::move(origins), m.at("product_seed").get<std::uint64_t>(),
                                       m.at("origin_radius").get<double>());
    cfg.layers = m.at("layers").get<int>();
    cfg.alpha = m.at("alpha").get<double>();
    cfg.beta_base = m.at("beta_base").get<double>();
    cfg.noise.drop_rate = m.at("drop_rate").get<double>();
    cfg.noise.granularity = parse_granularity(m.at("noise_granularity").get<std::string>());
    cfg.noise.clamp_nonnegative = m.at("noise_clamp").get<bool>();
    cfg.activation = parse_activation(m.at("activation").get<std::string>());
    cfg.input_dim = m.at("input_dim").get<Eigen::Index>();
    cfg.num_classes = m.at("num_classes").get<int>();
    const json& tol = m.at("tolerances");
    cfg.tol.manifold_eps = tol.at("manifold_eps").get<double>();
    cfg.tol.arcosh_clamp = tol.at("arcosh_clamp").get<double>();
    cfg.tol.taylor_cutoff = tol.at("taylor_cutoff").get<double>();
    cfg.tol.max_tangent_norm = tol.at("max_tangent_norm").get<double>();
    cfg.validate();

    const json& coefs = j.at("layer_coefficients");
    if (static_cast<int>(coefs.size()) != cfg.layers) throw FormatError("checkpoint: layer count mismatch");
    const json& params = j.at("params");
    ModelParams& p = c.params;
    for (std::size_t k = 0; k < cfg.product.size(); ++k) {
      const std::string name = "input_map." + std::to_string(k);
      p.input_maps.push_back(matrix_from(params.at(name), name));
      expect_shape(p.input_maps.back(), cfg.product.components[k].dim, cfg.input_dim, name);
    }
    for (int l = 0; l < cfg.layers; ++l) {
      LayerParams layer;
      layer.alpha = coefs[static_cast<std::size_t>(l)].at("alpha").get<double>();
      layer.beta = coefs[static_cast<std::size_t>(l)].at("beta").get<double>();
      for (std::size_t k = 0; k < cfg.product.size(); ++k) {
        const std::string name = "layer." + std::to_string(l + 1) + ".W." + std::to_string(k);
        layer.weights.push_back(matrix_from(params.at(name), name));
        const auto d = cfg.product.components[k].dim + 1;
        expect_shape(layer.weights.back(), d, d, name);
      }
      p.layers.push_back(std::move(layer));
    }
    p.classifier = matrix_from(params.at("classifier"), "classifier");
    expect_shape(p.classifier, cfg.product.ambient_width(), cfg.num_classes, "classifier");
    p.bias = matrix_from(params.at("bias"), "bias");
    expect_shape(p.bias, 1, cfg.num_classes, "bias");
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const NumericError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace rhgcn
