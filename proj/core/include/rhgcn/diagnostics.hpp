#pragma once

// Dirichlet-energy diagnostics: E(H) = trace(log_o(H)^T L log_o(H)) with L the
// normalized Laplacian, its per-layer decay bound
//
//   E(H^l) <= (1 - lambda)^2 ||(1 - beta_l) I + beta_l W_l||_2^2 E(H^{l-1}),
//
// and the row-stochastic norm bound ||X u||_2 <= sqrt(n) for unit u.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rhgcn/model.hpp"

namespace rhgcn {

/// trace(T^T L T) with T = log_origin(rows). Throws DimensionError if L is not n x n.
double dirichlet_energy(const LorentzBatch& h, const SparseMatrix& laplacian);
double dirichlet_energy(const Matrix& rows, const LorentzPoint& origin, const SparseMatrix& laplacian);

struct ProductEnergy {
  std::vector<double> components;
  double max = 0.0;
};

ProductEnergy product_energy(const std::vector<LorentzBatch>& parts, const SparseMatrix& laplacian);

struct EnergyLayer {
  int layer = 0;
  ProductEnergy energy;
};

struct EnergyTrace {
  std::vector<EnergyLayer> layers;  // layer 0 is the lifted input
  double lambda = 0.0;              // NaN when the spectral gap was not computed
  double alpha = 0.0;
  std::vector<double> betas;
  std::uint64_t seed = 0;

  double initial() const { return layers.front().energy.max; }
  double final() const { return layers.back().energy.max; }
};

/// Evaluation-mode forward pass recording the product energy after every layer.
EnergyTrace energy_trace(const ModelConfig& config, const ModelParams& params, const Matrix& features,
                         const SparseGraph& graph, std::uint64_t seed = 0);

struct BoundOptions {
  double relative_slack = 1e-6;
  /// With a ReLU model, layers whose pre-activation tangent has a negative entry are skipped.
  bool allow_relu = false;
  SpectralOptions spectral;
};

struct BoundLayer {
  int layer = 0;
  std::size_t component = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  double op_norm = 0.0;
  double bound = 0.0;
  bool skipped = false;
  bool passed = true;
};

struct BoundReport {
  double lambda = 0.0;
  double relative_slack = 0.0;
  std::vector<BoundLayer> layers;

  std::size_t violations() const;
  std::size_t skipped() const;
  bool passed() const { return violations() == 0; }
};

/// Largest singular value (dense SVD).
double spectral_norm(const Matrix& m);

/// Checks one sequence of energies E_0..E_L against the bound with per-layer operator norms.
BoundReport decay_bound_check(const std::vector<double>& energies, double lambda, const std::vector<double>& op_norms,
                              double relative_slack = 1e-6);

/// Runs the model and checks the bound per layer and component. Requires alpha = 0 in every
/// layer and canonical component origins (UsageError otherwise); HyperDrop is not applied.
BoundReport decay_bound_check(const ModelConfig& config, const ModelParams& params, const Matrix& features,
                              const SparseGraph& graph, const BoundOptions& options = {});

struct Lemma1Report {
  int n = 0;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;        // max ||X u|| / sqrt(n) over random trials
  double tightness_ratio = 0.0;  // the saturating construction
};

/// Random row-stochastic X (Dirichlet-like rows) and uniform unit u.
Lemma1Report lemma1_check(std::size_t trials, int n, std::uint64_t seed);

struct OversmoothingRow {
  double alpha = 0.0;
  int layers = 0;
  double initial = 0.0;
  double final = 0.0;
  double ratio() const { return initial > 0.0 ? final / initial : 0.0; }
};

struct OversmoothingReport {
  std::vector<EnergyTrace> traces;
  std::vector<OversmoothingRow> rows;
};

/// For every (alpha, L) pair: a seeded random model built from base, and its energy trace.
OversmoothingReport oversmoothing_report(const NodeDataset& data, const ModelConfig& base,
                                         const std::vector<double>& alphas, const std::vector<int>& depths,
                                         std::uint64_t seed);

/// Columns layer,component,energy,max_energy; lines starting with '#' carry the header echo.
void write_energy_csv(const EnergyTrace& trace, const std::filesystem::path& path, const std::string& header = {});
void write_summary_csv(const OversmoothingReport& report, const std::filesystem::path& path,
                       const std::string& header = {});
std::string bound_report_json(const BoundReport& report);
std::string lemma1_report_json(const std::vector<Lemma1Report>& reports);

}  // namespace rhgcn
