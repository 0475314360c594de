#include "gpnet/geometric_filter.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iostream>
#include <mutex>

#include <fmt/format.h>

#include "gpnet/error.hpp"
#include "gpnet/kernels.hpp"

namespace gpnet {

namespace {

void warn_identity_in_channel_sum(const FilterConfig& config) {
  static std::once_flag once;
  for (int c = 0; c < config.m; ++c) {
    if (config.d[c] + config.q0 == 0) {
      std::call_once(once, [c] {
        std::cerr << fmt::format(
            "warning: d_{} + q0 = 0 puts the identity inside the channel sum in addition to the "
            "alpha term\n",
            c + 1);
      });
      return;
    }
  }
}

double gib(std::size_t bytes) { return static_cast<double>(bytes) / double(std::size_t{1} << 30); }

// Per-channel sums of S^p Y for every p of the channel's exponent set, sharing
// the chain of powers S Y, S^2 Y, ... across channels.
std::vector<DenseMatrix> shared_power_sums(const SparseMatrix& s,
                                           const std::vector<ExponentSet>& sets,
                                           const DenseMatrix& y) {
  int max_exp = 0;
  for (const auto& set : sets)
    if (!set.exponents.empty()) max_exp = std::max(max_exp, set.exponents.back());
  std::vector<DenseMatrix> sums(sets.size(), DenseMatrix(y.rows(), y.cols()));
  std::vector<std::size_t> cursor(sets.size(), 0);

  auto add_if_listed = [&](int p, const DenseMatrix& power) {
    for (std::size_t c = 0; c < sets.size(); ++c) {
      const auto& exps = sets[c].exponents;
      if (cursor[c] < exps.size() && exps[cursor[c]] == p) {
        sums[c] += power;
        ++cursor[c];
      }
    }
  };

  add_if_listed(0, y);
  DenseMatrix current = y;
  DenseMatrix next;
  for (int p = 1; p <= max_exp; ++p) {
    kernels::spmm(s, current, next);
    std::swap(current, next);
    add_if_listed(p, current);
  }
  return sums;
}

std::vector<ExponentSet> all_exponent_sets(const FilterConfig& config) {
  std::vector<ExponentSet> sets;
  for (int c = 0; c < config.m; ++c) sets.push_back(exponent_set(config, static_cast<std::size_t>(c)));
  return sets;
}

// Exponent sets with any S^0 term removed, plus the per-channel weight of the
// identity (alpha, or alpha + beta when S^0 was listed). Folding the two
// identity terms into one coefficient keeps the k=1, d+q0=0 case exactly
// (alpha + beta) X.
struct SplitSets {
  std::vector<ExponentSet> positive;
  std::vector<double> identity_weight;
};

SplitSets split_identity(const FilterConfig& config) {
  SplitSets out;
  for (auto set : all_exponent_sets(config)) {
    double weight = config.alpha;
    if (set.exponents.front() == 0) {
      weight += static_cast<double>(config.beta);
      set.exponents.erase(set.exponents.begin());
    }
    out.positive.push_back(std::move(set));
    out.identity_weight.push_back(weight);
  }
  return out;
}

// alpha * E + beta * slab, where E is columns [c0, c0 + width) of the identity.
DenseMatrix apply_alpha_beta_block(const DenseMatrix& slab, double alpha, int beta,
                                   std::size_t c0) {
  DenseMatrix out = slab;
  out *= static_cast<double>(beta);
  for (std::size_t j = 0; j < slab.cols(); ++j) out(c0 + j, j) += alpha;
  return out;
}

// Columns [c0, c0 + width) of the identity, as an n x width slab.
DenseMatrix identity_columns(std::size_t n, std::size_t c0, std::size_t width) {
  DenseMatrix e(n, width);
  for (std::size_t j = 0; j < width; ++j) e(c0 + j, j) = 1.0;
  return e;
}

std::size_t block_width(std::size_t n, const MatrixPathOptions& options) {
  if (n <= options.dense_node_cap) return std::max<std::size_t>(n, 1);
  return std::max<std::size_t>(1, std::min(options.block_cols, n));
}

// Calls fn(c0, slab) with slab = S_adj[:, c0 : c0 + width] for consecutive
// column blocks of the geometric adjacency matrix.
void for_each_adjacency_block(const FilterConfig& config, const SparseMatrix& s,
                              const MatrixPathOptions& options,
                              const std::function<void(std::size_t, const DenseMatrix&)>& fn) {
  const std::size_t n = s.n();
  if (n > options.dense_node_cap && !options.allow_streaming) {
    throw Error(ErrorCode::kResource,
                fmt::format("{} aggregation on n = {} needs the channel matrices, above the dense "
                            "cap of {} nodes; enable streaming or use avg/sum aggregation, which "
                            "never forms them",
                            to_string(config.aggregation), n, options.dense_node_cap));
  }
  const std::size_t width = block_width(n, options);
  const std::size_t live = (static_cast<std::size_t>(config.m) + 2) * n * width * sizeof(double);
  if (live > options.memory_cap_bytes) {
    throw Error(ErrorCode::kResource,
                fmt::format("{} aggregation on n = {} with {}-column blocks needs {:.2f} GiB of "
                            "slabs, above the {:.2f} GiB cap; reduce the block width or raise "
                            "the memory cap",
                            to_string(config.aggregation), n, width, gib(live),
                            gib(options.memory_cap_bytes)));
  }
  const auto split = split_identity(config);
  for (std::size_t c0 = 0; c0 < n; c0 += width) {
    const std::size_t w = std::min(width, n - c0);
    const DenseMatrix e = identity_columns(n, c0, w);
    auto channels = shared_power_sums(s, split.positive, e);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      channels[c] = apply_alpha_beta_block(channels[c], split.identity_weight[c], config.beta, c0);
    }
    fn(c0, aggregate(channels, config.aggregation));
  }
}

}  // namespace

SparseMatrix propagation_operator(std::span<const Edge> edges, std::size_t n, bool self_loops) {
  return sym_normalize(build_adjacency(edges, n, self_loops));
}

ExponentSet exponent_set(const FilterConfig& config, std::size_t channel) {
  config.validate();
  if (channel >= static_cast<std::size_t>(config.m)) {
    throw Error(ErrorCode::kInput,
                fmt::format("channel {} out of range for m = {}", channel, config.m));
  }
  ExponentSet set{channel, {}};
  const int base = config.d[channel] + config.q0;
  for (int i = 0; i < config.k; ++i) set.exponents.push_back(i * config.q[channel] + base);
  return set;
}

DenseMatrix channel_sum_features(const SparseMatrix& s, const ExponentSet& exponents,
                                 const DenseMatrix& x) {
  if (exponents.exponents.empty()) throw Error(ErrorCode::kInput, "empty exponent set");
  if (s.n() != x.rows()) {
    throw Error(ErrorCode::kInput,
                fmt::format("operator is {}x{} but X has {} rows", s.n(), s.n(), x.rows()));
  }
  return std::move(shared_power_sums(s, {exponents}, x).front());
}

DenseMatrix channel_sum_matrix(const SparseMatrix& s, const ExponentSet& exponents,
                               const MatrixPathOptions& options) {
  if (exponents.exponents.empty()) throw Error(ErrorCode::kInput, "empty exponent set");
  const std::size_t n = s.n();
  const std::size_t bytes = n * n * sizeof(double);
  if (bytes > options.memory_cap_bytes) {
    throw Error(ErrorCode::kResource,
                fmt::format("dense {}x{} channel matrix needs {:.2f} GiB, above the {:.2f} GiB "
                            "cap; use the feature path (avg/sum) instead",
                            n, n, gib(bytes), gib(options.memory_cap_bytes)));
  }
  DenseMatrix out(n, n);
  const std::size_t width = std::max<std::size_t>(1, std::min(options.block_cols, n));
  for (std::size_t c0 = 0; c0 < n; c0 += width) {
    const std::size_t w = std::min(width, n - c0);
    auto slab = std::move(shared_power_sums(s, {exponents}, identity_columns(n, c0, w)).front());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < w; ++j) out(r, c0 + j) = slab(r, j);
  }
  return out;
}

DenseMatrix apply_alpha_beta(const DenseMatrix& channel_sum, double alpha, int beta) {
  if (channel_sum.rows() != channel_sum.cols()) {
    throw Error(ErrorCode::kInput, "apply_alpha_beta expects a square matrix");
  }
  return apply_alpha_beta_block(channel_sum, alpha, beta, 0);
}

DenseMatrix aggregate(std::span<const DenseMatrix> channels, Aggregation mode) {
  if (channels.empty()) throw Error(ErrorCode::kInput, "aggregate needs at least one channel");
  const std::size_t rows = channels.front().rows();
  const std::size_t cols = channels.front().cols();
  for (const auto& ch : channels) {
    if (ch.rows() != rows || ch.cols() != cols) {
      throw Error(ErrorCode::kInput, fmt::format("aggregate: channel shapes differ ({}x{} vs {}x{})",
                                                 rows, cols, ch.rows(), ch.cols()));
    }
  }
  if (channels.size() == 1) return channels.front();

  const std::size_t m = channels.size();
  DenseMatrix out(rows, cols);
  const auto total = static_cast<std::int64_t>(rows * cols);
#pragma omp parallel
  {
    std::vector<double> buf(m);
#pragma omp for schedule(static)
    for (std::int64_t idx = 0; idx < total; ++idx) {
      const auto i = static_cast<std::size_t>(idx);
      for (std::size_t c = 0; c < m; ++c) buf[c] = channels[c].data()[i];
      double v = 0.0;
      switch (mode) {
        case Aggregation::kMax:
          v = *std::max_element(buf.begin(), buf.end());
          break;
        case Aggregation::kMin:
          v = *std::min_element(buf.begin(), buf.end());
          break;
        case Aggregation::kSum:
        case Aggregation::kAvg:
          std::sort(buf.begin(), buf.end());
          for (double b : buf) v += b;
          if (mode == Aggregation::kAvg) v /= static_cast<double>(m);
          break;
      }
      out.data()[i] = v;
    }
  }
  return out;
}

DenseMatrix geometric_adjacency(const FilterConfig& config, const SparseMatrix& s,
                                const MatrixPathOptions& options) {
  config.validate();
  const std::size_t n = s.n();
  if (n * n * sizeof(double) > options.memory_cap_bytes) {
    throw Error(ErrorCode::kResource,
                fmt::format("dense geometric adjacency for n = {} exceeds the {:.2f} GiB cap", n,
                            gib(options.memory_cap_bytes)));
  }
  DenseMatrix out(n, n);
  for_each_adjacency_block(config, s, options, [&](std::size_t c0, const DenseMatrix& slab) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < slab.cols(); ++j) out(r, c0 + j) = slab(r, j);
  });
  return out;
}

DenseMatrix propagate_feature_path(const FilterConfig& config, const SparseMatrix& s,
                                   const DenseMatrix& x) {
  config.validate();
  if (config.aggregation == Aggregation::kMax || config.aggregation == Aggregation::kMin) {
    throw Error(ErrorCode::kInput,
                "max/min aggregation does not commute with X; use the matrix path");
  }
  if (s.n() != x.rows()) {
    throw Error(ErrorCode::kInput,
                fmt::format("operator is {}x{} but X has {} rows", s.n(), s.n(), x.rows()));
  }
  const auto split = split_identity(config);
  auto channels = shared_power_sums(s, split.positive, x);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    auto& ch = channels[c];
    ch *= static_cast<double>(config.beta);
    const double weight = split.identity_weight[c];
    if (weight != 0.0) {
      auto dst = ch.values();
      auto src = x.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * src[i];
    }
  }
  return aggregate(channels, config.aggregation);
}

DenseMatrix propagate_matrix_path(const FilterConfig& config, const SparseMatrix& s,
                                  const DenseMatrix& x, const MatrixPathOptions& options) {
  config.validate();
  if (s.n() != x.rows()) {
    throw Error(ErrorCode::kInput,
                fmt::format("operator is {}x{} but X has {} rows", s.n(), s.n(), x.rows()));
  }
  DenseMatrix h(x.rows(), x.cols());
  DenseMatrix part;
  std::vector<std::size_t> block_rows;
  for_each_adjacency_block(config, s, options, [&](std::size_t c0, const DenseMatrix& slab) {
    block_rows.resize(slab.cols());
    for (std::size_t j = 0; j < slab.cols(); ++j) block_rows[j] = c0 + j;
    kernels::gemm(slab, x.gather_rows(block_rows), part);
    h += part;
  });
  return h;
}

PropagatedFeatures propagate(const FilterConfig& config, const SparseMatrix& s,
                             const DenseMatrix& x, std::string_view dataset_id,
                             const MatrixPathOptions& options) {
  config.validate();
  warn_identity_in_channel_sum(config);
  PropagatedFeatures out;
  if (config.aggregation == Aggregation::kSum || config.aggregation == Aggregation::kAvg) {
    out.h_bar = propagate_feature_path(config, s, x);
  } else {
    out.h_bar = propagate_matrix_path(config, s, x, options);
  }
  if (!out.h_bar.all_finite()) {
    throw Error(ErrorCode::kNumeric, "propagated features contain non-finite values");
  }
  out.fingerprint = config_fingerprint(config, dataset_id);
  return out;
}

DenseMatrix relu(DenseMatrix h) {
  for (double& v : h.values()) v = std::max(v, 0.0);
  return h;
}

}  // namespace gpnet
