#pragma once

// Checkpoint container: a JSON document whose parameters are stored as the
// 16-hex-digit IEEE-754 bit pattern of each double, so round trips are exact.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "smeta/model.hpp"

namespace smeta {

inline constexpr int kCheckpointSchemaVersion = 1;

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::string stage;                          // e.g. "init", "pretrain", "metatrain"
  std::map<std::string, std::string> config;  // echo of the producing configuration
};

struct Checkpoint {
  int schema_version = kCheckpointSchemaVersion;
  ModelBundle bundle;
  TrainingMetadata metadata;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace smeta
