#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cloudsample/autodiff.hpp"

namespace cloudsample::ad {

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;  // row-major
};

/// Weight container:
///
///   u8  version (= 1)
///   u8[4] magic "CSWT"
///   u32 entry count
///   per entry: u16 name length, name bytes, u8 rank, u32 dims[rank],
///              u64 byte offset into the payload
///   payload: row-major float32 values
///
/// Every integer and float is little-endian.
inline constexpr std::uint8_t kWeightFileVersion = 1;

void write_weight_file(const std::filesystem::path& path,
                       std::span<const StoredTensor> tensors);
std::vector<StoredTensor> read_weight_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_weights(std::span<const StoredTensor> tensors);
std::vector<StoredTensor> decode_weights(std::span<const std::uint8_t> bytes);

}  // namespace cloudsample::ad
