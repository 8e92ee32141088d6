#pragma once

// Checkpoint file layout (all integers little-endian):
//
//   "S2S1"  u32 version (=1)  u32 tensor_count
//   per tensor: u32 name_len, name bytes, u8 rank, u32 dims[rank],
//               f32 payload[prod(dims)]
//
// The file must end exactly after the last payload.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2s/networks.hpp"

namespace s2s {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors<float>& tensors);

// Throws FormatError on bad magic, version, truncation or trailing bytes.
NamedTensors<float> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const NamedTensors<float>& tensors, const std::filesystem::path& path);
NamedTensors<float> load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

} // namespace s2s
