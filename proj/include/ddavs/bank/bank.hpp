#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ddavs/nd/array.hpp"

namespace ddavs::bank {

inline constexpr std::uint32_t kBankVersion = 1;

/// Per-class audio embeddings, one row each.
struct EmbeddingSet {
  std::size_t class_id = 0;
  nd::Array embeddings;
};

struct BankOptions {
  std::size_t k_per_class = 4;
  std::size_t m_nearest = 3;
  std::uint64_t seed = 0;
  /// Store the k centroids themselves instead of their nearest embeddings.
  bool centroid_rows = false;
};

/// Frozen, class-tagged prototype rows.
struct PrototypeBank {
  nd::Array prototypes;  // P x d
  std::vector<std::uint32_t> class_of;
  std::size_t classes = 0;
  std::vector<std::uint32_t> per_class_counts;
  std::uint32_t version = kBankVersion;

  std::size_t size() const noexcept { return prototypes.rows(); }
  std::size_t dim() const noexcept { return prototypes.cols(); }
  /// Throws ParameterError if counts, tags, or values are inconsistent.
  void validate() const;

  friend bool operator==(const PrototypeBank&, const PrototypeBank&) = default;
};

/// Clusters each class and keeps, per cluster, its `m_nearest` embeddings.
/// Rows run class by class, cluster by cluster, nearest first. Class `c`
/// clusters with seed `seed + c`.
PrototypeBank build_bank(std::span<const EmbeddingSet> sets, const BankOptions& opts = {});

/// "DAVB" | u32 version | u32 C | u32 d | C x u32 K_i | P x d f64, little endian.
std::size_t save_bank(const PrototypeBank& bank, const std::filesystem::path& path);
PrototypeBank load_bank(const std::filesystem::path& path);

/// Whitespace-separated text, one embedding per line.
void write_embeddings(const nd::Array& rows, const std::filesystem::path& path);
nd::Array read_embeddings(const std::filesystem::path& path);

}  // namespace ddavs::bank
