#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ppoue/numerics.hpp"

namespace ppoue {

struct Checkpoint {
  std::string env_name;
  std::uint64_t step = 0;
  double log_std = 0.0;
  DenseNet actor;
  DenseNet critic;
};

/*
 * Binary layout, little-endian:
 *   "PPUECKPT" | u32 version | u32 name_len | name | u64 step | f64 log_std | net actor | net critic
 *   net: u32 layer_count, then per layer u32 activation | u32 rows | u32 cols | f64[rows*cols] (row-major) | f64[rows]
 */
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ppoue
