#include "gpnet/eigensolver.hpp"

#include <cmath>

#include <fmt/format.h>
#include <lapacke.h>

#include "gpnet/error.hpp"

namespace gpnet {

SymmetricEigen dense_eigh_sym(const DenseMatrix& m, std::size_t cap) {
  const std::size_t n = m.rows();
  if (m.cols() != n) {
    throw Error(ErrorCode::kInput, fmt::format("eigh: matrix is {}x{}", m.rows(), m.cols()));
  }
  if (n > cap) {
    throw Error(ErrorCode::kInput,
                fmt::format("eigh: n = {} exceeds the eigendecomposition cap {}", n, cap));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-10) {
        throw Error(ErrorCode::kInput,
                    fmt::format("eigh: matrix not symmetric at ({}, {}): {} vs {}", i, j, m(i, j),
                                m(j, i)));
      }
    }
  }
  SymmetricEigen out;
  out.eigenvalues.resize(n);
  out.eigenvectors = m;
  if (n == 0) return out;
  // Row-major upper triangle; LAPACK returns eigenvectors as columns.
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                     out.eigenvectors.data(), static_cast<lapack_int>(n), out.eigenvalues.data());
  if (info != 0) {
    throw Error(ErrorCode::kNumeric, fmt::format("eigh: dsyevd failed with info = {}", info));
  }
  return out;
}

}  // namespace gpnet
