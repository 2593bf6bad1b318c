#pragma once

#include <filesystem>

#include "sadd/model.hpp"

namespace sadd {

// Model checkpoint: magic "SADD", format version u32, the architecture config
// as length-prefixed text, then each parameter tensor as (name length + name,
// rank, extents as u64, payload as little-endian f32). Round-trips bit-exact.
void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams<float>& params);
ModelParams<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace sadd
