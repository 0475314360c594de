#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include "gpnet/geometric_filter.hpp"

namespace gpnet {

// On-disk layout, little endian:
//   16 bytes  magic "GPNET:HBAR:v001\n"
//    8 bytes  n (u64)
//    8 bytes  d (u64)
//   32 bytes  fingerprint, ASCII hex
//   n*d*8     row-major float64
inline constexpr std::string_view kFeatureCacheMagic = "GPNET:HBAR:v001\n";

void write_features(const std::filesystem::path& path, const PropagatedFeatures& features);
PropagatedFeatures read_features(const std::filesystem::path& path);

std::filesystem::path feature_cache_path(const std::filesystem::path& dir,
                                         std::string_view dataset_id,
                                         std::string_view fingerprint);

// Reads the cache entry if present and its stored fingerprint matches.
std::optional<PropagatedFeatures> load_cached_features(const std::filesystem::path& dir,
                                                       std::string_view dataset_id,
                                                       std::string_view fingerprint);

}  // namespace gpnet
