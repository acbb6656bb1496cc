#pragma once

#include <filesystem>

#include "mczsl/model.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

/// Model checkpoint (MCZP v1), all integers and floats little-endian:
///
///   "MCZP"  u32 version = 1
///   u32 attr_dim  u32 feat_dim  u32 hidden_width
///   u32 flags (bit 0: self-gating disabled)
///   u32 normalization (0 none, 1 plain_cn, 2 scn)
///   f32 logit_scale  u64 init_seed
///   u32 tensor_count = 14, then tensor_count x (u32 rows, u32 cols)
///   u64 value_count, then value_count x f32 in flatten order
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
