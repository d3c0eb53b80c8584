#pragma once

#include <filesystem>
#include <string>

#include "rhgcn/model.hpp"
#include "rhgcn/run_config.hpp"

namespace rhgcn {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to rebuild a trained model: the run config echo, the model
/// configuration including the sampled component origins, and all parameters.
struct Checkpoint {
  RunConfig run;
  ModelConfig model;
  ModelParams params;
  int epoch = 0;
};

/// JSON document {"format": "rhgcn-checkpoint", "version": 1, ...}. Doubles are
/// written in shortest round-trip form, so load(save(c)) is bit-exact.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws IoError if unreadable, FormatError if malformed or of an unknown version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

const char* artifact_version();

}  // namespace rhgcn
