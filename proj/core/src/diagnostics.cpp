#include "rhgcn/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <Eigen/SVD>

#include "json.hpp"
#include "rhgcn/error.hpp"

namespace rhgcn {

namespace {

Matrix tangent_rows(const Matrix& rows, const LorentzPoint& origin) {
  Matrix t(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto y = LorentzPoint::unchecked(rows.row(i).transpose());
    t.row(i) = log_map(origin, y).coords().transpose();
  }
  return t;
}

double quadratic_trace(const Matrix& t, const SparseMatrix& laplacian) {
  const Matrix lt = laplacian * t;
  return t.cwiseProduct(lt).sum();
}

// For L = I - D^{-1/2} (A + I) D^{-1/2} the same quadratic form equals
// 1/2 sum_{i != j} -L_ij s_i s_j |t_i / s_i - t_j / s_j|^2 with s_i = sqrt(d_i) = 1 / sqrt(1 - L_ii).
// Summing squared differences keeps it nonnegative and free of cancellation when rows
// nearly agree. Returns NaN when L is not of that form.
double edge_form(const Matrix& t, const SparseMatrix& laplacian) {
  const Eigen::Index n = laplacian.rows();
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double self = 1.0 - laplacian.coeff(i, i);
    if (!(self > 0.0 && self <= 1.0)) return std::numeric_limits<double>::quiet_NaN();
    s[i] = 1.0 / std::sqrt(self);
  }
  if ((laplacian * s).cwiseAbs().maxCoeff() > 1e-10 * s.cwiseAbs().maxCoeff()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double e = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(laplacian, i); it; ++it) {
      const Eigen::Index j = it.col();
      if (j <= i) continue;
      const double w = -it.value() * s[i] * s[j];
      e += w * (t.row(i) / s[i] - t.row(j) / s[j]).squaredNorm();
    }
  }
  return e;
}

bool is_canonical(const LorentzPoint& p) {
  return p.coords()(0) == 1.0 && p.coords().tail(p.dim()).isZero(0.0);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  return out;
}

void write_header(std::ofstream& out, const std::string& header) {
  std::size_t start = 0;
  while (start < header.size()) {
    const auto end = header.find('\n', start);
    const auto line = header.substr(start, end == std::string::npos ? std::string::npos : end - start);
    out << "# " << line << '\n';
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

}  // namespace

double dirichlet_energy(const Matrix& rows, const LorentzPoint& origin, const SparseMatrix& laplacian) {
  if (laplacian.rows() != rows.rows() || laplacian.cols() != rows.rows()) {
    throw DimensionError("dirichlet_energy: Laplacian does not match the node count");
  }
  if (rows.cols() != origin.coords().size()) throw DimensionError("dirichlet_energy: origin width differs");
  const Matrix t = tangent_rows(rows, origin);
  const double e = edge_form(t, laplacian);
  return std::isnan(e) ? quadratic_trace(t, laplacian) : e;
}

double dirichlet_energy(const LorentzBatch& h, const SparseMatrix& laplacian) {
  return dirichlet_energy(h.rows(), h.origin(), laplacian);
}

ProductEnergy product_energy(const std::vector<LorentzBatch>& parts, const SparseMatrix& laplacian) {
  if (parts.empty()) throw DimensionError("product_energy: no components");
  ProductEnergy e;
  e.max = -std::numeric_limits<double>::infinity();
  for (const auto& part : parts) {
    e.components.push_back(dirichlet_energy(part, laplacian));
    e.max = std::max(e.max, e.components.back());
  }
  return e;
}

EnergyTrace energy_trace(const ModelConfig& config, const ModelParams& params, const Matrix& features,
                         const SparseGraph& graph, std::uint64_t seed) {
  ad::Tape tape;
  const BoundParams bound = bind_parameters(tape, params, false);
  ForwardOptions opts;
  opts.record_states = true;
  const ForwardResult fr = forward(tape, config, params, bound, features, graph, opts);

  EnergyTrace trace;
  trace.seed = seed;
  trace.alpha = params.layers.empty() ? config.alpha : params.layers.front().alpha;
  for (const auto& layer : params.layers) trace.betas.push_back(layer.beta);
  try {
    trace.lambda = spectral_gap(graph.laplacian_norm());
  } catch (const CapabilityError&) {
    trace.lambda = std::numeric_limits<double>::quiet_NaN();
  }
  for (std::size_t l = 0; l < fr.states.size(); ++l) {
    std::vector<LorentzBatch> parts;
    for (std::size_t j = 0; j < fr.states[l].size(); ++j) {
      parts.emplace_back(fr.states[l][j], config.product.components[j].origin);
    }
    trace.layers.push_back({static_cast<int>(l), product_energy(parts, graph.laplacian_norm())});
  }
  return trace;
}

std::size_t BoundReport::violations() const {
  std::size_t v = 0;
  for (const auto& l : layers) v += (!l.skipped && !l.passed) ? 1 : 0;
  return v;
}

std::size_t BoundReport::skipped() const {
  std::size_t v = 0;
  for (const auto& l : layers) v += l.skipped ? 1 : 0;
  return v;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

namespace {

BoundLayer evaluate_bound(int layer, double before, double after, double lambda, double op_norm, double slack) {
  BoundLayer b;
  b.layer = layer;
  b.energy_before = before;
  b.energy_after = after;
  b.op_norm = op_norm;
  b.bound = (1.0 - lambda) * (1.0 - lambda) * op_norm * op_norm * before;
  // Relative slack on the bound plus a round-off floor relative to the incoming energy,
  // so a bound of exactly zero (lambda = 1) tolerates O(eps^2) residual energy.
  const double floor = 1e-14 * std::abs(before);
  b.passed = after <= b.bound * (1.0 + slack) + floor;
  return b;
}

}  // namespace

BoundReport decay_bound_check(const std::vector<double>& energies, double lambda, const std::vector<double>& op_norms,
                              double relative_slack) {
  if (energies.size() != op_norms.size() + 1) {
    throw DimensionError("decay_bound_check: need one operator norm per layer transition");
  }
  BoundReport report;
  report.lambda = lambda;
  report.relative_slack = relative_slack;
  for (std::size_t l = 1; l < energies.size(); ++l) {
    report.layers.push_back(
        evaluate_bound(static_cast<int>(l), energies[l - 1], energies[l], lambda, op_norms[l - 1], relative_slack));
  }
  return report;
}

BoundReport decay_bound_check(const ModelConfig& config, const ModelParams& params, const Matrix& features,
                              const SparseGraph& graph, const BoundOptions& options) {
  for (const auto& layer : params.layers) {
    if (layer.alpha != 0.0) throw UsageError("decay bound applies only without the initial residual (alpha = 0)");
  }
  for (const auto& c : config.product.components) {
    if (!is_canonical(c.origin)) throw UsageError("decay bound check requires canonical component origins");
  }
  if (config.activation == Activation::relu && !options.allow_relu) {
    throw UsageError("decay bound check runs with identity activation unless ReLU is explicitly allowed");
  }

  ad::Tape tape;
  const BoundParams bound = bind_parameters(tape, params, false);
  ForwardOptions opts;
  opts.record_states = true;
  const ForwardResult fr = forward(tape, config, params, bound, features, graph, opts);

  BoundReport report;
  report.lambda = spectral_gap(graph.laplacian_norm(), options.spectral);
  report.relative_slack = options.relative_slack;
  const SparseMatrix& lap = graph.laplacian_norm();
  for (std::size_t l = 1; l < fr.states.size(); ++l) {
    const LayerParams& layer = params.layers[l - 1];
    for (std::size_t j = 0; j < config.product.size(); ++j) {
      const LorentzPoint& origin = config.product.components[j].origin;
      const Matrix& w = layer.weights[j];
      const Matrix mixed = Matrix::Identity(w.rows(), w.cols()) * (1.0 - layer.beta) + layer.beta * w;
      const Matrix prev = tangent_rows(fr.states[l - 1][j], origin);
      BoundLayer b = evaluate_bound(static_cast<int>(l), quadratic_trace(prev, lap),
                                    dirichlet_energy(fr.states[l][j], origin, lap), report.lambda,
                                    spectral_norm(mixed), options.relative_slack);
      b.component = j;
      if (config.activation == Activation::relu) {
        const Matrix pre = (graph.adj_norm() * prev) * mixed.transpose();
        if (pre.rightCols(pre.cols() - 1).minCoeff() < 0.0) b.skipped = true;
      }
      report.layers.push_back(b);
    }
  }
  return report;
}

Lemma1Report lemma1_check(std::size_t trials, int n, std::uint64_t seed) {
  if (n < 1) throw UsageError("lemma1_check: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double root = std::sqrt(static_cast<double>(n));

  Lemma1Report r;
  r.n = n;
  r.trials = trials;
  Matrix x(n, n);
  Vector u(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) x(i, k) = expo(rng);
      x.row(i) /= x.row(i).sum();
    }
    do {
      for (int k = 0; k < n; ++k) u(k) = normal(rng);
    } while (u.norm() == 0.0);
    u.normalize();
    const double norm = (x * u).norm();
    if (norm > root + 1e-9) ++r.violations;
    r.max_ratio = std::max(r.max_ratio, norm / root);
  }

  x.setZero();
  x.col(0).setOnes();
  u.setZero();
  u(0) = 1.0;
  r.tightness_ratio = (x * u).norm() / root;
  return r;
}

OversmoothingReport oversmoothing_report(const NodeDataset& data, const ModelConfig& base,
                                         const std::vector<double>& alphas, const std::vector<int>& depths,
                                         std::uint64_t seed) {
  if (data.graph.num_nodes() > 5000) throw CapabilityError("oversmoothing_report: graph above the diagnostics cap");
  OversmoothingReport report;
  for (int depth : depths) {
    for (double alpha : alphas) {
      ModelConfig cfg = base;
      cfg.alpha = alpha;
      cfg.layers = depth;
      cfg.input_dim = data.features.cols();
      if (cfg.num_classes < 2) cfg.num_classes = std::max(2, data.num_classes);
      const ModelParams params = ModelParams::initialize(cfg, seed);
      EnergyTrace trace = energy_trace(cfg, params, data.features, data.graph, seed);
      report.rows.push_back({alpha, depth, trace.initial(), trace.final()});
      report.traces.push_back(std::move(trace));
    }
  }
  return report;
}

void write_energy_csv(const EnergyTrace& trace, const std::filesystem::path& path, const std::string& header) {
  auto out = open_output(path);
  write_header(out, header);
  out << "layer,component,energy,max_energy\n";
  for (const auto& layer : trace.layers) {
    for (std::size_t j = 0; j < layer.energy.components.size(); ++j) {
      out << layer.layer << ',' << j << ',' << layer.energy.components[j] << ',' << layer.energy.max << '\n';
    }
  }
}

void write_summary_csv(const OversmoothingReport& report, const std::filesystem::path& path,
                       const std::string& header) {
  auto out = open_output(path);
  write_header(out, header);
  out << "alpha,layers,initial_energy,final_energy,ratio\n";
  for (const auto& r : report.rows) {
    out << r.alpha << ',' << r.layers << ',' << r.initial << ',' << r.final << ',' << r.ratio() << '\n';
  }
}

std::string bound_report_json(const BoundReport& report) {
  nlohmann::json j;
  j["lambda"] = report.lambda;
  j["relative_slack"] = report.relative_slack;
  j["violations"] = report.violations();
  j["skipped"] = report.skipped();
  j["passed"] = report.passed();
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : report.layers) {
    layers.push_back({{"layer", l.layer},
                      {"component", l.component},
                      {"energy_before", l.energy_before},
                      {"energy_after", l.energy_after},
                      {"op_norm", l.op_norm},
                      {"bound", l.bound},
                      {"skipped", l.skipped},
                      {"passed", l.passed}});
  }
  return j.dump(2);
}

std::string lemma1_report_json(const std::vector<Lemma1Report>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    j.push_back({{"n", r.n},
                 {"trials", r.trials},
                 {"violations", r.violations},
                 {"max_ratio", r.max_ratio},
                 {"tightness_ratio", r.tightness_ratio}});
  }
  return j.dump(2);
}

}  // namespace rhgcn
