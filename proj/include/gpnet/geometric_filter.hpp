#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gpnet/dense_matrix.hpp"
#include "gpnet/filter_config.hpp"
#include "gpnet/sparse_matrix.hpp"

namespace gpnet {

struct ExponentSet {
  std::size_t channel = 0;
  std::vector<int> exponents;  // strictly increasing
};

struct PropagatedFeatures {
  DenseMatrix h_bar;
  std::string fingerprint;
};

// Memory policy for the matrix path (Max/Min aggregation, channel matrices).
struct MatrixPathOptions {
  // Graphs up to this size are handled as a single dense block.
  std::size_t dense_node_cap = 2048;
  // Column block width once streaming.
  std::size_t block_cols = 512;
  bool allow_streaming = true;
  // Upper bound on live dense slabs, in bytes.
  std::size_t memory_cap_bytes = std::size_t{3} << 30;
};

// Normalized propagation operator for an undirected edge list.
SparseMatrix propagation_operator(std::span<const Edge> edges, std::size_t n, bool self_loops);

// Powers {d_c + q0, q_c + d_c + q0, ..., (k-1) q_c + d_c + q0} for channel `channel`.
// The identity term weighted by alpha is not part of the set.
ExponentSet exponent_set(const FilterConfig& config, std::size_t channel);

// sum_{p in exponents} S^p X via repeated spmm; S^p is never formed.
DenseMatrix channel_sum_features(const SparseMatrix& s, const ExponentSet& exponents,
                                 const DenseMatrix& x);

// Dense sum_{p in exponents} S^p, built column block by column block.
// Throws Error(kResource) if the n x n result exceeds the memory cap.
DenseMatrix channel_sum_matrix(const SparseMatrix& s, const ExponentSet& exponents,
                               const MatrixPathOptions& options = {});

// alpha * I + beta * channel_sum. Input must be square.
DenseMatrix apply_alpha_beta(const DenseMatrix& channel_sum, double alpha, int beta);

// Element-wise max / min / mean / sum over channels. Sum and mean add the
// per-element values in sorted order, so the result is independent of channel
// order bit for bit.
DenseMatrix aggregate(std::span<const DenseMatrix> channels, Aggregation mode);

// Dense geometric adjacency matrix for small graphs (tests, spectra).
DenseMatrix geometric_adjacency(const FilterConfig& config, const SparseMatrix& s,
                                const MatrixPathOptions& options = {});

// H_bar through per-channel feature products. Sum/Avg only.
DenseMatrix propagate_feature_path(const FilterConfig& config, const SparseMatrix& s,
                                   const DenseMatrix& x);

// H_bar through column blocks of the channel matrices. Any aggregation.
DenseMatrix propagate_matrix_path(const FilterConfig& config, const SparseMatrix& s,
                                  const DenseMatrix& x, const MatrixPathOptions& options = {});

// Feature path for Sum/Avg, matrix path for Max/Min.
PropagatedFeatures propagate(const FilterConfig& config, const SparseMatrix& s,
                             const DenseMatrix& x, std::string_view dataset_id = {},
                             const MatrixPathOptions& options = {});

// Element-wise max(0, .), the ReLU ablation applied to H_bar.
DenseMatrix relu(DenseMatrix h);

}  // namespace gpnet
