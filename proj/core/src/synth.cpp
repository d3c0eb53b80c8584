#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "rhgcn/graph.hpp"

namespace rhgcn {

namespace {

// Zachary's karate club: 34 members, 78 friendships, faction after the split
// (0 = instructor's club, 1 = administrator's club).
constexpr int kKarateNodes = 34;
constexpr int kKarateEdges[][2] = {
    {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},  {0, 11},
    {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},
    {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},
    {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
    {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32}, {15, 33},
    {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29},
    {23, 32}, {23, 33}, {24, 25}, {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
    {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33}};
constexpr int kKarateFaction[kKarateNodes] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0,
                                              0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

const char* kind_name(SynthKind kind) {
  switch (kind) {
    case SynthKind::balanced_tree: return "balanced_tree";
    case SynthKind::path: return "path";
    case SynthKind::sbm: return "sbm";
    case SynthKind::karate: return "karate";
  }
  return "?";
}

int positive_int(const SynthSpec& spec, const std::string& key, double fallback, int minimum) {
  const double v = spec.get(key, fallback);
  if (!(v >= minimum) || v != std::floor(v) || v > 1e7) {
    throw ConfigError(std::string(kind_name(spec.kind)) + ": parameter '" + key + "' must be an integer >= " +
                      std::to_string(minimum));
  }
  return static_cast<int>(v);
}

double probability(const SynthSpec& spec, const std::string& key, double fallback) {
  const double v = spec.get(key, fallback);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(kind_name(spec.kind)) + ": parameter '" + key + "' must lie in [0, 1]");
  }
  return v;
}

NodeDataset finish(int n, const std::vector<Edge>& edges, Matrix features, std::vector<int> labels, int classes,
                   const SynthSpec& spec, std::uint64_t seed) {
  const double train = probability(spec, "train", 0.2);
  const double val = probability(spec, "val", 0.2);
  if (train + val >= 1.0) {
    throw ConfigError("train + val fractions must leave a test split");
  }
  Splits splits = stratified_split(labels, classes, train, val, seed ^ 0x9e3779b97f4a7c15ULL);
  NodeDataset data{SparseGraph(n, edges), std::move(features), std::move(labels), classes, std::move(splits), 0,
                   spec.to_string()};
  data.validate();
  return data;
}

NodeDataset make_tree(const SynthSpec& spec, std::uint64_t seed) {
  const int b = positive_int(spec, "b", 2, 1);
  const int h = positive_int(spec, "h", 3, 0);
  std::vector<Edge> edges;
  std::vector<int> depth{0};
  std::vector<int> branch{0};
  // Breadth-first numbering: children of node p are appended level by level.
  int level_start = 0;
  for (int level = 1; level <= h; ++level) {
    const int level_end = static_cast<int>(depth.size());
    for (int p = level_start; p < level_end; ++p) {
      for (int c = 0; c < b; ++c) {
        const int child = static_cast<int>(depth.size());
        if (child > 1'000'000) throw ConfigError("balanced_tree: too many nodes");
        edges.emplace_back(p, child);
        depth.push_back(level);
        branch.push_back(level == 1 ? c : branch[p]);
      }
    }
    level_start = level_end;
  }
  const int n = static_cast<int>(depth.size());
  Matrix features = Matrix::Zero(n, h + 1);
  for (int i = 0; i < n; ++i) features(i, depth[i]) = 1.0;
  const int classes = std::max(b, 1);
  return finish(n, edges, std::move(features), branch, classes, spec, seed);
}

NodeDataset make_path(const SynthSpec& spec, std::uint64_t seed) {
  const int n = positive_int(spec, "n", 10, 1);
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = 2 * i < n ? 0 : 1;
  Matrix features;
  const double period = spec.get("period", 0.0);
  if (period > 0.0) {
    // Seeded-phase sine waves along the path, amplitude 0.5.
    const int dim = positive_int(spec, "dim", 2, 1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    features.resize(n, dim);
    for (int c = 0; c < dim; ++c) {
      const double p = phase(rng);
      for (int i = 0; i < n; ++i) features(i, c) = 0.5 * std::sin(2.0 * std::numbers::pi * i / period + p);
    }
  } else if (period < 0.0 || !std::isfinite(period)) {
    throw ConfigError("path: period must be > 0");
  } else {
    features.resize(n, 2);
    for (int i = 0; i < n; ++i) {
      const double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
      features(i, 0) = t;
      features(i, 1) = 1.0 - t;
    }
  }
  return finish(n, edges, std::move(features), std::move(labels), n > 1 ? 2 : 1, spec, seed);
}

NodeDataset make_sbm(const SynthSpec& spec, std::uint64_t seed) {
  const int blocks = positive_int(spec, "blocks", 2, 1);
  const int size = positive_int(spec, "size", 30, 1);
  const double p_in = probability(spec, "p_in", 0.9);
  const double p_out = probability(spec, "p_out", 0.05);
  const double noise = spec.get("noise", 0.5);
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("sbm: noise must be >= 0");
  const int n = blocks * size;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      const double p = (u / size == v / size) ? p_in : p_out;
      if (unit(rng) < p) edges.emplace_back(u, v);
    }
  }
  Matrix features(n, blocks);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i / size;
    for (int c = 0; c < blocks; ++c) features(i, c) = (c == labels[i] ? 1.0 : 0.0) + noise * normal(rng);
  }
  return finish(n, edges, std::move(features), std::move(labels), blocks, spec, seed);
}

NodeDataset make_karate(const SynthSpec& spec, std::uint64_t seed) {
  std::vector<Edge> edges;
  for (const auto& e : kKarateEdges) edges.emplace_back(e[0], e[1]);
  Matrix features = Matrix::Identity(kKarateNodes, kKarateNodes);
  std::vector<int> labels(kKarateFaction, kKarateFaction + kKarateNodes);
  return finish(kKarateNodes, edges, std::move(features), std::move(labels), 2, spec, seed);
}

}  // namespace

SynthSpec SynthSpec::parse(const std::string& text) {
  SynthSpec spec;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind == "balanced_tree" || kind == "tree") {
    spec.kind = SynthKind::balanced_tree;
  } else if (kind == "path") {
    spec.kind = SynthKind::path;
  } else if (kind == "sbm") {
    spec.kind = SynthKind::sbm;
  } else if (kind == "karate") {
    spec.kind = SynthKind::karate;
  } else {
    throw ConfigError("unknown synthetic graph kind '" + kind + "'");
  }
  if (colon == std::string::npos) return spec;
  std::stringstream stream(text.substr(colon + 1));
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("synthetic parameter '" + item + "' lacks '='");
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      spec.params[item.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("synthetic parameter '" + item + "' is not numeric");
    }
  }
  return spec;
}

std::string SynthSpec::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << kind_name(kind);
  char sep = ':';
  for (const auto& [k, v] : params) {
    out << sep << k << '=' << v;
    sep = ',';
  }
  return out.str();
}

double SynthSpec::get(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

NodeDataset synth_graph(const SynthSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case SynthKind::balanced_tree: return make_tree(spec, seed);
    case SynthKind::path: return make_path(spec, seed);
    case SynthKind::sbm: return make_sbm(spec, seed);
    case SynthKind::karate: return make_karate(spec, seed);
  }
  throw ConfigError("unknown synthetic graph kind");
}

Splits stratified_split(const std::vector<int>& labels, int num_classes, double train_frac, double val_frac,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Splits splits;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(static_cast<int>(i));
    }
    if (members.empty()) continue;
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(members[i], members[pick(rng)]);
    }
    const auto m = members.size();
    auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(train_frac * m)));
    n_train = std::min(n_train, m);
    auto n_val = std::min(static_cast<std::size_t>(std::lround(val_frac * m)), m - n_train);
    splits.train.insert(splits.train.end(), members.begin(), members.begin() + n_train);
    splits.val.insert(splits.val.end(), members.begin() + n_train, members.begin() + n_train + n_val);
    splits.test.insert(splits.test.end(), members.begin() + n_train + n_val, members.end());
  }
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.val.begin(), splits.val.end());
  std::sort(splits.test.begin(), splits.test.end());
  return splits;
}

}  // namespace rhgcn
