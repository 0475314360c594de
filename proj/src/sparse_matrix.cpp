#include "gpnet/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gpnet/error.hpp"

namespace gpnet {

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
                           std::vector<NodeId> col_indices, std::vector<double> values)
    : n_(n),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != n_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
    throw Error(ErrorCode::kInput, "CSR arrays have inconsistent lengths");
  }
  for (std::size_t r = 0; r < n_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) {
      throw Error(ErrorCode::kInput, fmt::format("row_offsets decrease at row {}", r));
    }
    auto cols = row_cols(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] >= n_) {
        throw Error(ErrorCode::kInput, fmt::format("column {} out of range in row {}", cols[i], r));
      }
      if (i > 0 && cols[i - 1] >= cols[i]) {
        throw Error(ErrorCode::kInput, fmt::format("columns not strictly increasing in row {}", r));
      }
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::vector<NodeId> cols(n);
  std::iota(cols.begin(), cols.end(), NodeId{0});
  return SparseMatrix(n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  if (dense.rows() != dense.cols()) throw Error(ErrorCode::kInput, "from_dense: matrix not square");
  const std::size_t n = dense.rows();
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (dense(r, c) != 0.0) {
        cols.push_back(static_cast<NodeId>(c));
        vals.push_back(dense(r, c));
      }
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const noexcept {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<NodeId>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_offsets_[r] + static_cast<std::size_t>(it - cols.begin())];
}

bool SparseMatrix::is_structurally_symmetric() const {
  for (std::size_t r = 0; r < n_; ++r) {
    for (NodeId c : row_cols(r)) {
      auto other = row_cols(c);
      if (!std::binary_search(other.begin(), other.end(), static_cast<NodeId>(r))) return false;
    }
  }
  return true;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (!is_structurally_symmetric()) return false;
  for (std::size_t r = 0; r < n_; ++r) {
    auto cols = row_cols(r);
    auto vals = row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (std::abs(vals[i] - at(cols[i], r)) > tol) return false;
    }
  }
  return true;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(n_, n_);
  for (std::size_t r = 0; r < n_; ++r) {
    auto cols = row_cols(r);
    auto vals = row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) out(r, cols[i]) = vals[i];
  }
  return out;
}

SparseMatrix SparseMatrix::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_) throw Error(ErrorCode::kInput, "permutation length mismatch");
  std::vector<std::vector<std::pair<NodeId, double>>> rows(n_);
  for (std::size_t r = 0; r < n_; ++r) {
    auto cols = row_cols(r);
    auto vals = row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      rows[perm[r]].emplace_back(static_cast<NodeId>(perm[cols[i]]), vals[i]);
    }
  }
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> cols;
  std::vector<double> vals;
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (auto [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(n_, std::move(offsets), std::move(cols), std::move(vals));
}

DegreeVector degrees_of(const SparseMatrix& adj) {
  DegreeVector out{std::vector<double>(adj.n(), 0.0)};
  for (std::size_t r = 0; r < adj.n(); ++r) {
    for (double v : adj.row_values(r)) out.degrees[r] += v;
  }
  return out;
}

SparseMatrix build_adjacency(std::span<const Edge> edges, std::size_t n, bool add_self_loops) {
  std::vector<std::vector<NodeId>> neighbours(n);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw Error(ErrorCode::kInput,
                  fmt::format("edge ({}, {}) references a node outside [0, {})", u, v, n));
    }
    if (u == v) continue;
    neighbours[u].push_back(v);
    neighbours[v].push_back(u);
  }
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> cols;
  for (std::size_t r = 0; r < n; ++r) {
    auto& row = neighbours[r];
    if (add_self_loops) row.push_back(static_cast<NodeId>(r));
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets.push_back(cols.size());
  }
  std::vector<double> vals(cols.size(), 1.0);
  return SparseMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix sym_normalize(const SparseMatrix& adj) {
  const auto deg = degrees_of(adj).degrees;
  std::vector<double> inv_sqrt(deg.size(), 0.0);
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (deg[i] > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  }
  std::vector<double> vals(adj.values().begin(), adj.values().end());
  for (std::size_t r = 0; r < adj.n(); ++r) {
    auto cols = adj.row_cols(r);
    const std::size_t base = adj.row_offsets()[r];
    for (std::size_t i = 0; i < cols.size(); ++i) {
      vals[base + i] = vals[base + i] * (inv_sqrt[r] * inv_sqrt[cols[i]]);
    }
  }
  return SparseMatrix(adj.n(), {adj.row_offsets().begin(), adj.row_offsets().end()},
                      {adj.col_indices().begin(), adj.col_indices().end()}, std::move(vals));
}

std::size_t undirected_edge_count(const SparseMatrix& adj) {
  std::size_t count = 0;
  for (std::size_t r = 0; r < adj.n(); ++r) {
    for (NodeId c : adj.row_cols(r)) {
      if (c > r) ++count;
    }
  }
  return count;
}

std::vector<std::size_t> connected_components(const SparseMatrix& adj) {
  constexpr auto kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> comp(adj.n(), kUnset);
  std::vector<std::size_t> stack;
  std::size_t next = 0;
  for (std::size_t s = 0; s < adj.n(); ++s) {
    if (comp[s] != kUnset) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (NodeId v : adj.row_cols(u)) {
        if (comp[v] == kUnset) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace gpnet
