#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gpnet/dense_matrix.hpp"

namespace gpnet {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Square CSR operator. Column indices are strictly increasing within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  // Validates the CSR invariants; throws Error(kInput) on violation.
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
               std::vector<NodeId> col_indices, std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  // Drops exact zeros; `dense` must be square.
  static SparseMatrix from_dense(const DenseMatrix& dense);

  std::size_t n() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return col_indices_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const NodeId> row_cols(std::size_t r) const noexcept {
    return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const noexcept {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  // Stored value at (r, c), zero if absent.
  double at(std::size_t r, std::size_t c) const noexcept;

  bool is_structurally_symmetric() const;
  bool is_symmetric(double tol = 0.0) const;
  DenseMatrix to_dense() const;

  // Node relabeling: result(perm[i], perm[j]) = this(i, j).
  SparseMatrix permuted(std::span<const std::size_t> perm) const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::vector<double> values_;
};

struct DegreeVector {
  std::vector<double> degrees;
};

// Row sums of `adj` (a stored self-loop contributes its value once).
DegreeVector degrees_of(const SparseMatrix& adj);

// Symmetrizes, deduplicates, drops raw self-loops, then adds unit diagonal iff
// `add_self_loops`. Binary values. Throws Error(kInput) on node id >= n.
SparseMatrix build_adjacency(std::span<const Edge> edges, std::size_t n, bool add_self_loops);

// D^{-1/2} A D^{-1/2}; zero-degree rows/cols stay zero.
SparseMatrix sym_normalize(const SparseMatrix& adj);

// Number of distinct undirected non-loop edges stored in `adj`.
std::size_t undirected_edge_count(const SparseMatrix& adj);

// Connected-component id per node (0-based, in order of first appearance).
std::vector<std::size_t> connected_components(const SparseMatrix& adj);

}  // namespace gpnet
