#include "gpnet/filter_config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <sodium.h>

#include "gpnet/error.hpp"

namespace gpnet {

std::string_view to_string(Aggregation agg) noexcept {
  switch (agg) {
    case Aggregation::kMax: return "max";
    case Aggregation::kMin: return "min";
    case Aggregation::kAvg: return "avg";
    case Aggregation::kSum: return "sum";
  }
  return "sum";
}

Aggregation parse_aggregation(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower.ends_with("-fp")) lower.resize(lower.size() - 3);
  if (lower == "max") return Aggregation::kMax;
  if (lower == "min") return Aggregation::kMin;
  if (lower == "avg" || lower == "mean") return Aggregation::kAvg;
  if (lower == "sum") return Aggregation::kSum;
  throw Error(ErrorCode::kUsage,
              fmt::format("unknown aggregation '{}' (expected max, min, avg or sum)", text));
}

void FilterConfig::validate() const {
  if (m < 1) throw Error(ErrorCode::kUsage, fmt::format("m must be >= 1 (got {})", m));
  if (k < 1) throw Error(ErrorCode::kUsage, fmt::format("k must be >= 1 (got {})", k));
  if (q0 < 0) throw Error(ErrorCode::kUsage, fmt::format("q0 must be >= 0 (got {})", q0));
  if (q.size() != static_cast<std::size_t>(m)) {
    throw Error(ErrorCode::kUsage,
                fmt::format("expected {} common ratios q (one per channel), got {}", m, q.size()));
  }
  if (d.size() != static_cast<std::size_t>(m)) {
    throw Error(ErrorCode::kUsage, fmt::format(
        "expected {} neighborhood coefficients d (one per channel), got {}", m, d.size()));
  }
  for (int c = 0; c < m; ++c) {
    if (q[c] < 1) {
      throw Error(ErrorCode::kUsage,
                  fmt::format("common ratio q_{} must satisfy q_m >= 1 (got {})", c + 1, q[c]));
    }
    if (d[c] < 0) {
      throw Error(ErrorCode::kUsage,
                  fmt::format("neighborhood coefficient d_{} must be >= 0 (got {})", c + 1, d[c]));
    }
  }
  if (beta != 1 && beta != -1) {
    throw Error(ErrorCode::kUsage, fmt::format("beta must be +1 or -1 (got {})", beta));
  }
}

std::string FilterConfig::canonical() const {
  return fmt::format("m={};k={};q0={};q={};d={};alpha={:.17g};beta={};agg={};self_loops={}", m, k,
                     q0, fmt::join(q, ","), fmt::join(d, ","), alpha, beta, to_string(aggregation),
                     self_loops ? "on" : "off");
}

int FilterConfig::max_exponent() const {
  int best = 0;
  for (int c = 0; c < m; ++c) best = std::max(best, (k - 1) * q[c] + d[c] + q0);
  return best;
}

FilterConfig sgc_config(int hops, bool self_loops) {
  FilterConfig cfg;
  cfg.m = 1;
  cfg.k = 1;
  cfg.q0 = 0;
  cfg.q = {1};
  cfg.d = {hops};
  cfg.alpha = 0.0;
  cfg.beta = 1;
  cfg.aggregation = Aggregation::kSum;
  cfg.self_loops = self_loops;
  return cfg;
}

FilterConfig mlp_config(double alpha, int beta) {
  FilterConfig cfg = sgc_config(0);
  cfg.alpha = alpha;
  cfg.beta = beta;
  return cfg;
}

std::string config_fingerprint(const FilterConfig& config, std::string_view dataset_id) {
  if (sodium_init() < 0) throw Error(ErrorCode::kResource, "libsodium failed to initialise");
  const std::string text = fmt::format("{}|dataset={}", config.canonical(), dataset_id);
  std::array<unsigned char, 16> digest{};
  crypto_generichash(digest.data(), digest.size(),
                     reinterpret_cast<const unsigned char*>(text.data()), text.size(), nullptr, 0);
  std::array<char, 33> hex{};
  sodium_bin2hex(hex.data(), hex.size(), digest.data(), digest.size());
  return std::string(hex.data(), 32);
}

}  // namespace gpnet
