#pragma once

#include <filesystem>

#include "pathovox/model.hpp"

namespace pathovox {

/// Binary checkpoint, little-endian throughout: magic "PVOX", format
/// version u32, layer count u32, then per layer a kind tag u8,
/// kind-specific metadata, and each parameter tensor as dim count u32,
/// dims u32 each, values as 64-bit reals.
void save_checkpoint(const Model& model, const std::filesystem::path& path);

/// Rebuilds the model from a checkpoint. Throws CheckpointError on
/// magic/version mismatch or any structural inconsistency.
Model load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace pathovox
