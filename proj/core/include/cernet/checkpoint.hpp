#pragma once

#include <filesystem>
#include <string>

#include "cernet/model.hpp"

namespace cernet {

inline constexpr int kCheckpointFormatVersion = 1;

// A trained network: configuration plus parameters.
struct Checkpoint {
  ModelConfig config;
  NetworkParams params;

  bool operator==(const Checkpoint&) const = default;
};

// JSON document {format_version, config, params}; matrices are row-major
// nested arrays. Serialization is deterministic, so equal checkpoints give
// byte-identical text.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

// The "config" object of a checkpoint on its own. num_classes and
// output_dim are required; loss_layer_weights and topdown_source default.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cernet
