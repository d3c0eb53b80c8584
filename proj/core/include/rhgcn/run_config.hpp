#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rhgcn {

/// Flat key=value run configuration. Lines are "key = value"; '#' starts a comment.
/// Unknown keys are rejected. Doubles are written in shortest round-trip form, so
/// parse(serialize()) reproduces every field exactly.
struct RunConfig {
  std::string dataset;  // directory with edges.tsv, features.csv, labels.csv, splits.json
  std::string synth = "balanced_tree:b=2,h=3";  // used when dataset is empty
  std::uint64_t data_seed = 0;

  std::string signature = "2x2";
  double origin_radius = 1.0;
  int layers = 2;
  double alpha = 0.1;
  double beta_base = 0.5;
  double drop_rate = 0.0;
  std::string noise_granularity = "per_node_component";
  bool noise_clamp = false;
  std::string activation = "relu";

  std::string optimizer = "adam";
  double lr = 0.01;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  int epochs = 1000;
  int patience = 100;
  std::uint64_t seed = 0;
  std::string out = "run";

  int sweep_seeds = 1;
  int threads = 1;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> entries() const;

  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

std::vector<std::string> run_config_keys();

/// Shortest decimal text that parses back to exactly x.
std::string format_double(double x);
double parse_double(const std::string& text, const std::string& what);

}  // namespace rhgcn
