#pragma once

#include <filesystem>

#include "sadd/tensor.hpp"

namespace sadd {

// SDT1 tensor file: magic "SDT1", rank as u32, one u64 extent per dimension,
// then the payload as little-endian 32-bit floats, row-major. Round-trips are
// bit-exact. Zero extents are rejected; absurd extents fail as overflow
// before any allocation.
void write_tensor(const std::filesystem::path& path, const Tensor<float>& t);
Tensor<float> read_tensor(const std::filesystem::path& path);

}  // namespace sadd
