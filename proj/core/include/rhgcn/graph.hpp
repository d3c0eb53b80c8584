#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "rhgcn/manifold_ops.hpp"

namespace rhgcn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Edge = std::pair<int, int>;

/// Undirected graph with the self-looped symmetric normalization
/// P = D~^{-1/2} (A + I) D~^{-1/2} and Laplacian I - P, both n x n.
class SparseGraph {
 public:
  /// Deduplicates edges, drops input self-loops. Throws IndexError on out-of-range endpoints.
  SparseGraph(int n, const std::vector<Edge>& edges);

  int num_nodes() const noexcept { return n_; }
  /// Unique undirected edges with first < second.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const SparseMatrix& adj_norm() const noexcept { return adj_norm_; }
  const SparseMatrix& laplacian_norm() const noexcept { return laplacian_; }
  /// Diagonal of D~ (degree + 1).
  const Vector& degrees() const noexcept { return degrees_; }

  Matrix dense_adj_norm() const { return Matrix(adj_norm_); }
  Matrix dense_laplacian() const { return Matrix(laplacian_); }

 private:
  int n_;
  std::vector<Edge> edges_;
  Vector degrees_;
  SparseMatrix adj_norm_;
  SparseMatrix laplacian_;
};

SparseMatrix normalized_adjacency(int n, const std::vector<Edge>& edges);

struct SpectralOptions {
  int dense_limit = 5000;
  double zero_tol = 1e-8;
};

/// Smallest eigenvalue of the (symmetric) Laplacian above zero_tol. Dense solve;
/// throws CapabilityError above dense_limit, NumericError if no eigenvalue qualifies.
double spectral_gap(const SparseMatrix& laplacian, const SpectralOptions& options = {});
double spectral_gap(const Matrix& laplacian, const SpectralOptions& options = {});

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

struct NodeDataset {
  SparseGraph graph;
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  Splits splits;
  /// Rows of edges.tsv as listed (before deduplication); 0 for generated data.
  std::size_t listed_edges = 0;
  std::string name;

  /// Checks sizes, label range and split disjointness. Throws FormatError.
  void validate() const;
};

/// Reads edges.tsv, features.csv, labels.csv, splits.json from a directory.
NodeDataset load_dataset(const std::filesystem::path& dir);
void write_dataset(const NodeDataset& data, const std::filesystem::path& dir);

enum class SynthKind { balanced_tree, path, sbm, karate };

struct SynthSpec {
  SynthKind kind = SynthKind::balanced_tree;
  std::map<std::string, double> params;

  /// "sbm:blocks=2,size=30,p_in=0.9,p_out=0.05", "balanced_tree:b=2,h=3", "path:n=10", "karate".
  static SynthSpec parse(const std::string& text);
  std::string to_string() const;
  double get(const std::string& key, double fallback) const;
};

/// Deterministic in (spec, seed). Throws ConfigError on invalid parameters.
NodeDataset synth_graph(const SynthSpec& spec, std::uint64_t seed);

/// Stratified per-class split, seeded. Every class with >= 1 node gets >= 1 train node.
Splits stratified_split(const std::vector<int>& labels, int num_classes, double train_frac, double val_frac,
                        std::uint64_t seed);

}  // namespace rhgcn
