#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "posevit/vit.hpp"

namespace posevit {

// Binary checkpoint, little-endian throughout:
//
//   bytes 0..3   magic "PVNT"
//   u32          format version (currently 1)
//   u32 x 10     image_size, patch_height, patch_width, stride_height,
//                stride_width, embed_dim, num_heads, depth, mlp_hidden,
//                num_classes
//   f64 x 2      dropout_block, dropout_head
//   u32          tensor count
//   per tensor   u32 name length, name bytes, u32 rank, u64 extents[rank],
//                f64 values[product(extents)]
//   u32          CRC-32 (IEEE) of every preceding byte
//
// Tensors are ordered by name. Loading verifies magic, version, CRC and
// that the tensor table matches the embedded config exactly, raising
// CheckpointError with the corresponding fault on the first violation.

inline constexpr char kCheckpointMagic[4] = {'P', 'V', 'N', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params,
                                               const ViTConfig& config);
std::pair<ModelParams, ViTConfig> deserialize_checkpoint(
    std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelParams& params, const ViTConfig& config,
                     const std::string& path);
std::pair<ModelParams, ViTConfig> load_checkpoint(const std::string& path);

}  // namespace posevit
