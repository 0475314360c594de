#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gpnet/dense_matrix.hpp"
#include "gpnet/eigensolver.hpp"
#include "gpnet/filter_config.hpp"
#include "gpnet/sparse_matrix.hpp"

namespace gpnet {

enum class FilterClass { kLowPass, kHighPass, kAllPass, kMixed };

std::string_view to_string(FilterClass c) noexcept;

struct FilterResponses {
  std::vector<std::vector<double>> channels;  // [channel][lambda]
  // Present for Sum/Avg only; Max/Min have no single spectral response.
  std::optional<std::vector<double>> aggregated;
};

// g_c(l) = alpha + beta * sum_{p in exponents_c} (1 - l)^p, per channel.
FilterResponses filter_response(const FilterConfig& config, std::span<const double> lambdas);

// Low-pass iff mean|g| on [0,1) exceeds twice mean|g| on (1,2]; high-pass for
// the reverse; all-pass iff max(g) - min(g) < 1e-9; mixed otherwise.
// `lambdas` is the sampled grid (step <= 0.01) the responses belong to.
FilterClass classify_filter(std::span<const double> lambdas, std::span<const double> responses);

// Uniform grid 0, step, 2*step, ... up to and including `upper`.
std::vector<double> lambda_grid(double upper, double step = 0.01);

enum class DisconnectedPolicy { kError, kPerComponent };

// Limit of S_sym^K as K grows for an adjacency with self-loops:
// entry (i, j) = sqrt(d_i d_j) / (2e + n) within a connected graph. Disconnected
// graphs either throw Error(kInput) or use each component's own volume.
DenseMatrix stationary_limit(const SparseMatrix& adj_with_self_loops,
                             DisconnectedPolicy policy = DisconnectedPolicy::kError);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending eigenvalues of I - S
  FilterResponses responses;        // evaluated at `eigenvalues`
  bool per_channel_only = false;    // true for Max/Min aggregation
  Aggregation aggregation = Aggregation::kSum;
  FilterClass filter_class = FilterClass::kMixed;
  std::vector<FilterClass> channel_classes;
};

// Eigenvalues of I - S plus the filter's responses on them. The class is taken
// on a 0.01 grid spanning [0, largest eigenvalue]. Refuses n > cap.
SpectrumReport spectrum_report(const FilterConfig& config, const SparseMatrix& s,
                               std::size_t cap = kDefaultEigenCap);

// CSV with header `lambda,channel,response`, sorted by lambda then channel.
// Channels are numbered from 1; the aggregated curve uses channel `sum`/`avg`.
void emit_spectrum_csv(const SpectrumReport& report, const std::filesystem::path& path);

}  // namespace gpnet
