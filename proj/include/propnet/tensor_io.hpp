#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "propnet/tensor.hpp"

namespace propnet {

// HMK1 container: "HMK1", little-endian u32 n_maps, H, W, then
// n_maps*H*W little-endian IEEE-754 float32 values, row-major, map-major.
// Values are narrowed to float32 on write.
void write_tensor(std::ostream& out, const Tensor3& t);
void write_tensor(const std::string& path, const Tensor3& t);
Tensor3 read_tensor(std::istream& in);
Tensor3 read_tensor(const std::string& path);

std::vector<std::uint8_t> encode_tensor(const Tensor3& t);
Tensor3 decode_tensor(const std::vector<std::uint8_t>& bytes);

// 64-bit FNV-1a over a byte buffer; used for manifest checksums.
std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes);
std::string hex64(std::uint64_t value);

}  // namespace propnet
