#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "wdsel/model.hpp"

namespace wdsel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout (all integers and doubles little-endian):
///   "WDSC" | u32 version | u64 architecture hash | u32 bank size |
///   u64 feature_dim, blocks, channels, head_channels, head_blocks, min_window |
///   u8 linear | u32 parameter count |
///   per parameter: u32 name length, name, u32 rank, u64 dims[rank], f64 values |
///   "CSDW"
void save_checkpoint(const WdsNet& model, const std::filesystem::path& path);

/// Truncated or malformed files raise corrupt, an unknown version raises
/// version, and a header whose hash disagrees with its own architecture or with
/// `expected` raises hash_mismatch. Nothing is returned on failure.
WdsNet load_checkpoint(const std::filesystem::path& path,
                       const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace wdsel
