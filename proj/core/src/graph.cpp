#include "rhgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

namespace rhgcn {

namespace {

std::vector<Edge> canonical_edges(int n, const std::vector<Edge>& edges) {
  std::set<Edge> unique;
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw IndexError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range for " +
                       std::to_string(n) + " nodes");
    }
    if (u != v) unique.emplace(std::min(u, v), std::max(u, v));
  }
  return {unique.begin(), unique.end()};
}

}  // namespace

SparseGraph::SparseGraph(int n, const std::vector<Edge>& edges) : n_(n) {
  if (n < 1) {
    throw ConfigError("graph needs at least one node");
  }
  edges_ = canonical_edges(n, edges);
  degrees_ = Vector::Ones(n);
  for (const auto& [u, v] : edges_) {
    degrees_[u] += 1.0;
    degrees_[v] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> adj;
  std::vector<Eigen::Triplet<double>> lap;
  adj.reserve(2 * edges_.size() + n);
  lap.reserve(2 * edges_.size() + n);
  for (int i = 0; i < n; ++i) {
    const double self = 1.0 / degrees_[i];
    adj.emplace_back(i, i, self);
    lap.emplace_back(i, i, 1.0 - self);
  }
  for (const auto& [u, v] : edges_) {
    const double w = 1.0 / std::sqrt(degrees_[u] * degrees_[v]);
    adj.emplace_back(u, v, w);
    adj.emplace_back(v, u, w);
    lap.emplace_back(u, v, -w);
    lap.emplace_back(v, u, -w);
  }
  adj_norm_.resize(n, n);
  adj_norm_.setFromTriplets(adj.begin(), adj.end());
  laplacian_.resize(n, n);
  laplacian_.setFromTriplets(lap.begin(), lap.end());
}

SparseMatrix normalized_adjacency(int n, const std::vector<Edge>& edges) { return SparseGraph(n, edges).adj_norm(); }

double spectral_gap(const Matrix& laplacian, const SpectralOptions& options) {
  if (laplacian.rows() != laplacian.cols()) {
    throw DimensionError("spectral_gap: Laplacian must be square");
  }
  if (laplacian.rows() > options.dense_limit) {
    throw CapabilityError("spectral_gap: " + std::to_string(laplacian.rows()) + " nodes exceeds the dense limit of " +
                          std::to_string(options.dense_limit));
  }
  const Eigen::MatrixXd sym = 0.5 * (laplacian + laplacian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("spectral_gap: eigensolver failed");
  }
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    if (solver.eigenvalues()[i] > options.zero_tol) return solver.eigenvalues()[i];
  }
  throw NumericError("spectral_gap: Laplacian has no non-zero eigenvalue");
}

double spectral_gap(const SparseMatrix& laplacian, const SpectralOptions& options) {
  if (laplacian.rows() > options.dense_limit) {
    throw CapabilityError("spectral_gap: " + std::to_string(laplacian.rows()) + " nodes exceeds the dense limit of " +
                          std::to_string(options.dense_limit));
  }
  return spectral_gap(Matrix(laplacian), options);
}

void NodeDataset::validate() const {
  const auto n = static_cast<std::size_t>(graph.num_nodes());
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw FormatError("features have " + std::to_string(features.rows()) + " rows, graph has " + std::to_string(n) +
                      " nodes");
  }
  if (labels.size() != n) {
    throw FormatError("labels have " + std::to_string(labels.size()) + " rows, graph has " + std::to_string(n) +
                      " nodes");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw FormatError("label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  std::vector<char> seen(n, 0);
  for (const auto* set : {&splits.train, &splits.val, &splits.test}) {
    for (int idx : *set) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
        throw FormatError("split index " + std::to_string(idx) + " out of range");
      }
      if (seen[idx]++) {
        throw FormatError("node " + std::to_string(idx) + " appears in more than one split slot");
      }
    }
  }
}

}  // namespace rhgcn
