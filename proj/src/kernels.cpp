#include "gpnet/kernels.hpp"

#include <algorithm>
#include <cstdint>

#include <fmt/format.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gpnet/error.hpp"

namespace gpnet::kernels {

namespace {

void check_spmm(const SparseMatrix& s, const DenseMatrix& x) {
  if (s.n() != x.rows()) {
    throw Error(ErrorCode::kInput,
                fmt::format("spmm: operator is {}x{} but X has {} rows", s.n(), s.n(), x.rows()));
  }
}

void check_gemm(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kInput, fmt::format("gemm: {}x{} times {}x{}", a.rows(), a.cols(),
                                               b.rows(), b.cols()));
  }
}

void check_gemm_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::kInput, fmt::format("gemm_tn: ({}x{})^T times {}x{}", a.rows(),
                                               a.cols(), b.rows(), b.cols()));
  }
}

void reshape(DenseMatrix& out, std::size_t rows, std::size_t cols) {
  if (out.rows() != rows || out.cols() != cols) out = DenseMatrix(rows, cols);
}

// out.row(r) = sum over stored (r, c) of s(r, c) * x.row(c), in column order.
inline void spmm_row(const SparseMatrix& s, const DenseMatrix& x, DenseMatrix& out,
                     std::size_t r) {
  auto dst = out.row(r);
  std::fill(dst.begin(), dst.end(), 0.0);
  auto cols = s.row_cols(r);
  auto vals = s.row_values(r);
  const std::size_t d = x.cols();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const double w = vals[i];
    const double* src = x.data() + static_cast<std::size_t>(cols[i]) * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
  }
}

inline void gemm_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                     std::size_t r) {
  auto dst = out.row(r);
  std::fill(dst.begin(), dst.end(), 0.0);
  auto arow = a.row(r);
  const std::size_t m = b.cols();
  for (std::size_t l = 0; l < arow.size(); ++l) {
    const double w = arow[l];
    const double* src = b.data() + l * m;
    for (std::size_t j = 0; j < m; ++j) dst[j] += w * src[j];
  }
}

// Rows [j0, j1) of A^T B, accumulated over i in ascending order.
inline void gemm_tn_block(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out,
                          std::size_t j0, std::size_t j1) {
  const std::size_t m = b.cols();
  for (std::size_t j = j0; j < j1; ++j) {
    auto dst = out.row(j);
    std::fill(dst.begin(), dst.end(), 0.0);
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.data() + i * a.cols();
    const double* brow = b.data() + i * m;
    for (std::size_t j = j0; j < j1; ++j) {
      const double w = arow[j];
      if (w == 0.0) continue;
      double* dst = out.data() + j * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += w * brow[c];
    }
  }
}

}  // namespace

namespace serial {

void spmm(const SparseMatrix& s, const DenseMatrix& x, DenseMatrix& out) {
  check_spmm(s, x);
  reshape(out, s.n(), x.cols());
  for (std::size_t r = 0; r < s.n(); ++r) spmm_row(s, x, out, r);
}

void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  check_gemm(a, b);
  reshape(out, a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) gemm_row(a, b, out, r);
}

void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  check_gemm_tn(a, b);
  reshape(out, a.cols(), b.cols());
  gemm_tn_block(a, b, out, 0, a.cols());
}

}  // namespace serial

void spmm(const SparseMatrix& s, const DenseMatrix& x, DenseMatrix& out) {
  check_spmm(s, x);
  reshape(out, s.n(), x.cols());
  const auto n = static_cast<std::int64_t>(s.n());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t r = 0; r < n; ++r) spmm_row(s, x, out, static_cast<std::size_t>(r));
}

void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  check_gemm(a, b);
  reshape(out, a.rows(), b.cols());
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) gemm_row(a, b, out, static_cast<std::size_t>(r));
}

void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  check_gemm_tn(a, b);
  reshape(out, a.cols(), b.cols());
  constexpr std::int64_t kBlock = 32;
  const auto d = static_cast<std::int64_t>(a.cols());
  const std::int64_t blocks = (d + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const auto j0 = static_cast<std::size_t>(blk * kBlock);
    const auto j1 = static_cast<std::size_t>(std::min(d, (blk + 1) * kBlock));
    gemm_tn_block(a, b, out, j0, j1);
  }
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& x) {
  DenseMatrix out;
  spmm(s, x, out);
  return out;
}

DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out;
  gemm(a, b, out);
  return out;
}

DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out;
  gemm_tn(a, b, out);
  return out;
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace gpnet::kernels
