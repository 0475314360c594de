#include <doctest.h>

#include <cmath>

#include "../support/synthetic.hpp"
#include "gpnet/eigensolver.hpp"
#include "gpnet/error.hpp"
#include "gpnet/kernels.hpp"
#include "gpnet/sparse_matrix.hpp"

using namespace gpnet;
using gpnet::testing::Rng;

namespace {

DenseMatrix dense(std::size_t r, std::size_t c, std::vector<double> v) {
  return DenseMatrix(r, c, std::move(v));
}

SparseMatrix path3_normalized() {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  return sym_normalize(build_adjacency(edges, 3, true));
}

}  // namespace

TEST_CASE("build_adjacency symmetrizes, deduplicates and handles self-loops") {
  const std::vector<Edge> one{{0, 1}};
  CHECK(build_adjacency(one, 2, true).to_dense() == dense(2, 2, {1, 1, 1, 1}));
  CHECK(build_adjacency(one, 2, false).to_dense() == dense(2, 2, {0, 1, 1, 0}));

  const std::vector<Edge> noisy{{0, 1}, {1, 0}, {0, 0}};
  CHECK(build_adjacency(noisy, 2, false).to_dense() == dense(2, 2, {0, 1, 1, 0}));
}

TEST_CASE("build_adjacency rejects out-of-range node ids") {
  const std::vector<Edge> bad{{0, 3}};
  try {
    build_adjacency(bad, 3, true);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInput);
  }
}

TEST_CASE("build_adjacency is idempotent under re-symmetrization") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial) * 3;
    auto edges = gpnet::testing::random_edges(n, 0.3, rng, trial % 2 == 0);
    for (bool loops : {true, false}) {
      const auto adj = build_adjacency(edges, n, loops);
      std::vector<Edge> stored;
      for (std::size_t r = 0; r < n; ++r)
        for (NodeId c : adj.row_cols(r)) stored.emplace_back(static_cast<NodeId>(r), c);
      CHECK(build_adjacency(stored, n, loops) == adj);
      CHECK(adj.is_structurally_symmetric());
    }
  }
}

TEST_CASE("sym_normalize") {
  const std::vector<Edge> one{{0, 1}};
  CHECK(max_abs_diff(sym_normalize(build_adjacency(one, 2, true)).to_dense(),
                     dense(2, 2, {0.5, 0.5, 0.5, 0.5})) < 1e-15);

  // Path 0-1-2 with self-loops: degrees (2, 3, 2).
  const auto s = path3_normalized();
  CHECK(s.at(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));
  CHECK(s.at(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.is_symmetric(0.0));

  // Node 2 is isolated without self-loops: zero row and column.
  const auto iso = sym_normalize(build_adjacency(one, 3, false));
  CHECK(iso.row_cols(2).empty());
  CHECK(iso.at(0, 1) == 1.0);
}

TEST_CASE("degrees count a self-loop once") {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  const auto d = degrees_of(build_adjacency(edges, 3, true)).degrees;
  CHECK(d == std::vector<double>{2, 3, 2});
}

TEST_CASE("spmm small examples") {
  Rng rng(3);
  const auto x = gpnet::testing::random_dense(4, 3, rng);
  CHECK(kernels::spmm(SparseMatrix::identity(4), x) == x);

  const auto s = SparseMatrix::from_dense(dense(2, 2, {0.5, 0.5, 0.5, 0.5}));
  CHECK(kernels::spmm(s, dense(2, 1, {1, 3})) == dense(2, 1, {2, 2}));

  try {
    kernels::spmm(s, x);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInput);
  }
}

TEST_CASE("spmm matches a brute-force dense product") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = trial < 10 ? 5 : 40;
    const auto s = sym_normalize(build_adjacency(gpnet::testing::random_edges(n, 0.3, rng), n, true));
    const auto x = gpnet::testing::random_dense(n, 7, rng);
    const auto expected = gpnet::testing::naive_matmul(s.to_dense(), x);
    const auto got = kernels::spmm(s, x);
    CHECK(max_abs_diff(got, expected) < 1e-12);

    DenseMatrix serial_out;
    kernels::serial::spmm(s, x, serial_out);
    CHECK(serial_out == got);
  }
}

TEST_CASE("gemm and gemm_tn match brute force; serial and parallel agree bitwise") {
  Rng rng(9);
  for (auto [n, k, m] : {std::tuple{3, 4, 2}, std::tuple{65, 70, 7}, std::tuple{130, 33, 5}}) {
    const auto a = gpnet::testing::random_dense(n, k, rng);
    const auto b = gpnet::testing::random_dense(k, m, rng);
    const auto c = gpnet::testing::random_dense(n, m, rng);
    CHECK(max_abs_diff(kernels::gemm(a, b), gpnet::testing::naive_matmul(a, b)) < 1e-12);
    CHECK(max_abs_diff(kernels::gemm_tn(a, c), gpnet::testing::naive_matmul(a.transposed(), c)) <
          1e-12);

    DenseMatrix ref;
    kernels::serial::gemm(a, b, ref);
    CHECK(ref == kernels::gemm(a, b));
    kernels::serial::gemm_tn(a, c, ref);
    CHECK(ref == kernels::gemm_tn(a, c));
  }
}

TEST_CASE("dense_eigh_sym small cases") {
  auto id = dense_eigh_sym(DenseMatrix::identity(3));
  for (double l : id.eigenvalues) CHECK(l == doctest::Approx(1.0));

  auto swap = dense_eigh_sym(dense(2, 2, {0, 1, 1, 0}));
  CHECK(swap.eigenvalues[0] == doctest::Approx(-1.0));
  CHECK(swap.eigenvalues[1] == doctest::Approx(1.0));

  // Augmented Laplacian of the 3-node path: S has eigenvalues 1, 1/2 and
  // trace(S) - 3/2 = -1/6, so I - S has 0, 1/2, 7/6.
  const auto lap = DenseMatrix::identity(3) - path3_normalized().to_dense();
  auto eig = dense_eigh_sym(lap);
  CHECK(eig.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(eig.eigenvalues[0]) < 1e-12);
  CHECK(eig.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eig.eigenvalues[2] == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
  // Null vector proportional to D^{1/2} 1 = (sqrt 2, sqrt 3, sqrt 2).
  const double norm = std::sqrt(7.0);
  const double sign = eig.eigenvectors(0, 0) > 0 ? 1.0 : -1.0;
  CHECK(sign * eig.eigenvectors(0, 0) == doctest::Approx(std::sqrt(2.0) / norm).epsilon(1e-12));
  CHECK(sign * eig.eigenvectors(1, 0) == doctest::Approx(std::sqrt(3.0) / norm).epsilon(1e-12));
  CHECK(sign * eig.eigenvectors(2, 0) == doctest::Approx(std::sqrt(2.0) / norm).epsilon(1e-12));
}

TEST_CASE("dense_eigh_sym reconstructs and is orthonormal") {
  Rng rng(21);
  for (std::size_t n : {1u, 6u, 30u, 80u}) {
    auto a = gpnet::testing::random_dense(n, n, rng);
    const auto m = a + a.transposed();
    const auto eig = dense_eigh_sym(m);
    CHECK(std::is_sorted(eig.eigenvalues.begin(), eig.eigenvalues.end()));
    const auto& u = eig.eigenvectors;
    DenseMatrix scaled = u;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) scaled(i, j) *= eig.eigenvalues[j];
    const auto rebuilt = gpnet::testing::naive_matmul(scaled, u.transposed());
    CHECK(max_abs_diff(rebuilt, m) < 1e-8 * static_cast<double>(n));
    const auto gram = gpnet::testing::naive_matmul(u.transposed(), u);
    CHECK(max_abs_diff(gram, DenseMatrix::identity(n)) < 1e-8);
  }
}

TEST_CASE("dense_eigh_sym rejects asymmetric input and oversize input") {
  try {
    dense_eigh_sym(dense(2, 2, {0, 1, 0.5, 0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInput);
  }
  CHECK_THROWS_AS(dense_eigh_sym(DenseMatrix::identity(4), 3), Error);
}

TEST_CASE("normalized spectra: S in [-1, 1], augmented Laplacian in [0, 2) with one zero per component") {
  Rng rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial) * 3;
    const bool connected = trial % 3 != 0;
    const auto edges = gpnet::testing::random_edges(n, 0.15, rng, connected);
    for (bool loops : {false, true}) {
      const auto adj = build_adjacency(edges, n, loops);
      const auto s = sym_normalize(adj);
      const auto eig_s = dense_eigh_sym(s.to_dense());
      CHECK(eig_s.eigenvalues.front() >= -1.0 - 1e-10);
      CHECK(eig_s.eigenvalues.back() <= 1.0 + 1e-10);
      if (!loops) continue;
      const auto lap = dense_eigh_sym(DenseMatrix::identity(n) - s.to_dense());
      CHECK(lap.eigenvalues.front() >= -1e-10);
      CHECK(lap.eigenvalues.back() < 2.0);
      const auto comp = connected_components(adj);
      const std::size_t components = *std::max_element(comp.begin(), comp.end()) + 1;
      std::size_t zeros = 0;
      for (double l : lap.eigenvalues) zeros += std::abs(l) < 1e-9 ? 1 : 0;
      CHECK(zeros == components);
    }
  }
}

TEST_CASE("permuted relabels nodes") {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  const auto s = path3_normalized();
  const std::vector<std::size_t> perm{2, 0, 1};
  const auto p = s.permuted(perm);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(p.at(perm[i], perm[j]) == s.at(i, j));
}
