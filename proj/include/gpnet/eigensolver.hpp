#pragma once

#include <cstddef>
#include <vector>

#include "gpnet/dense_matrix.hpp"

namespace gpnet {

struct SymmetricEigen {
  std::vector<double> eigenvalues;  // ascending
  DenseMatrix eigenvectors;         // column j pairs with eigenvalues[j]
};

inline constexpr std::size_t kDefaultEigenCap = 25'000;

// Full eigendecomposition of a symmetric matrix.
// Throws Error(kInput) if |M - M^T| > 1e-10 anywhere or rows > cap,
// Error(kNumeric) if the solver does not converge.
SymmetricEigen dense_eigh_sym(const DenseMatrix& m, std::size_t cap = kDefaultEigenCap);

}  // namespace gpnet
