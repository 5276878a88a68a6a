#pragma once

#include <string>

#include "gibbsnet/trainer.hpp"

// Versioned binary checkpoint: a fixed header (magic, version, config hash,
// iteration, payload hash), then per-network parameter blobs with shape
// manifests and the optimizer moments. All scalars are little-endian; floats
// are 64-bit.

namespace gibbsnet {

constexpr std::uint64_t kCheckpointMagic = 0x31504b43'54454e47ULL;  // "GNETCKP1"
constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const TrainerState& st,
                     std::uint64_t config_hash);

struct LoadedCheckpoint {
  TrainerState state;
  std::uint64_t config_hash = 0;
  std::uint64_t payload_hash = 0;
};

// Verifies magic, version and the stored payload hash; a mismatch raises
// CorruptError. Config compatibility is the caller's check.
LoadedCheckpoint load_checkpoint(const std::string& path);

// FNV-1a 64-bit, the content hash used for checkpoints and manifests.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::string& path);

}  // namespace gibbsnet
