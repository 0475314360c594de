#include "gpnet/feature_cache.hpp"

#include <array>
#include <cstdint>
#include <string>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "gpnet/error.hpp"

namespace gpnet {

void write_features(const std::filesystem::path& path, const PropagatedFeatures& features) {
  if (features.fingerprint.size() != 32) {
    throw Error(ErrorCode::kInput, "feature cache fingerprint must be 32 hex digits");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write to a sibling then rename so readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    auto out = io::open_out(tmp);
    out.write(kFeatureCacheMagic.data(), static_cast<std::streamsize>(kFeatureCacheMagic.size()));
    io::write_scalar<std::uint64_t>(out, features.h_bar.rows());
    io::write_scalar<std::uint64_t>(out, features.h_bar.cols());
    out.write(features.fingerprint.data(), 32);
    io::write_array<double>(out, features.h_bar.values());
  }
  std::filesystem::rename(tmp, path);
}

PropagatedFeatures read_features(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  const std::string what = path.string();
  std::array<char, 16> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 16 || std::string_view(magic.data(), 16) != kFeatureCacheMagic) {
    throw Error(ErrorCode::kMalformed, fmt::format("{}: not a feature cache file", what));
  }
  const auto rows = io::read_scalar<std::uint64_t>(in, what);
  const auto cols = io::read_scalar<std::uint64_t>(in, what);
  std::string fingerprint(32, '\0');
  in.read(fingerprint.data(), 32);
  if (in.gcount() != 32) throw Error(ErrorCode::kMalformed, fmt::format("{}: truncated header", what));
  std::vector<double> data(rows * cols);
  io::read_array<double>(in, data, what);
  if (!io::at_eof(in)) {
    throw Error(ErrorCode::kCountMismatch, fmt::format("{}: trailing bytes after payload", what));
  }
  return {DenseMatrix(rows, cols, std::move(data)), std::move(fingerprint)};
}

std::filesystem::path feature_cache_path(const std::filesystem::path& dir,
                                         std::string_view dataset_id,
                                         std::string_view fingerprint) {
  return dir / fmt::format("{}-{}.hbar", dataset_id.empty() ? "anon" : dataset_id, fingerprint);
}

std::optional<PropagatedFeatures> load_cached_features(const std::filesystem::path& dir,
                                                       std::string_view dataset_id,
                                                       std::string_view fingerprint) {
  const auto path = feature_cache_path(dir, dataset_id, fingerprint);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto features = read_features(path);
  if (features.fingerprint != fingerprint) return std::nullopt;
  return features;
}

}  // namespace gpnet
