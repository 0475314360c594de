#pragma once

#include "gpnet/dense_matrix.hpp"
#include "gpnet/sparse_matrix.hpp"

// Dense/sparse products used by propagation and training.
//
// `gpnet::kernels` holds the OpenMP versions; `gpnet::kernels::serial` holds
// the single-threaded references they are tested against. Every output element
// is accumulated by one thread in a fixed order, so both produce bit-identical
// results for any thread count.
namespace gpnet::kernels {

namespace serial {

// out = S * X
void spmm(const SparseMatrix& s, const DenseMatrix& x, DenseMatrix& out);
// out = A * B
void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);
// out = A^T * B
void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);

}  // namespace serial

void spmm(const SparseMatrix& s, const DenseMatrix& x, DenseMatrix& out);
void gemm(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);
void gemm_tn(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out);

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& x);
DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b);

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace gpnet::kernels
