#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ddavs/model/params.hpp"

namespace ddavs::harness {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t step = 0;
  std::string config_json;
  std::map<std::string, nd::Array> tensors;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint snapshot(const model::ParamStore& params, std::uint64_t step, std::string config_json);
/// Copies every tensor into `params`; names and shapes must match exactly.
void restore(const Checkpoint& ckpt, model::ParamStore& params);

/// "DAVC" | u32 version | u64 step | config | u64 count | records of
/// (name, u32 ndim, u64 dims..., f64 values...), little endian.
std::size_t save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ddavs::harness
