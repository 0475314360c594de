#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gpnet {

enum class Aggregation { kMax, kMin, kAvg, kSum };

std::string_view to_string(Aggregation agg) noexcept;
// Accepts "max", "min", "avg", "sum" (and the "-fp" suffixed forms).
Aggregation parse_aggregation(std::string_view text);

// Hyperparameters of the multi-channel geometric polynomial filter.
//
// Channel c (0-based) contributes the powers i*q[c] + d[c] + q0 for i in [0, k)
// of the normalized adjacency; alpha weights the identity term of every
// channel and beta (+1 or -1) signs the polynomial part.
struct FilterConfig {
  int m = 1;
  int k = 2;
  int q0 = 1;
  std::vector<int> q{2};
  std::vector<int> d{0};
  double alpha = 1.0;
  int beta = 1;
  Aggregation aggregation = Aggregation::kSum;
  bool self_loops = true;

  // Throws Error(kUsage) naming the violated constraint.
  void validate() const;

  // Stable text form, used for hashing and CSV output.
  std::string canonical() const;

  int max_exponent() const;

  friend bool operator==(const FilterConfig&, const FilterConfig&) = default;
};

// m=1, k=1, alpha=0, beta=1, single exponent `hops` (d1 = hops, q0 = 0).
FilterConfig sgc_config(int hops, bool self_loops = true);
// m=1, k=1, d1=q0=0: the propagation collapses to (alpha+beta) * I.
FilterConfig mlp_config(double alpha = 0.0, int beta = 1);

// 32 lowercase hex digits identifying (config, dataset id).
std::string config_fingerprint(const FilterConfig& config, std::string_view dataset_id);

}  // namespace gpnet
