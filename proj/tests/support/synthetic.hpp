#pragma once

// Test-only generators and brute-force oracles. Nothing here calls the
// kernels it is used to check.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gpnet/dataset.hpp"
#include "gpnet/dense_matrix.hpp"
#include "gpnet/sparse_matrix.hpp"

namespace gpnet::testing {

using Rng = std::mt19937_64;

// Random undirected graph; when `connected`, a random spanning tree is laid
// down first so the result has one component.
std::vector<Edge> random_edges(std::size_t n, double p, Rng& rng, bool connected = true);

DenseMatrix random_dense(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                         double hi = 1.0);

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

// result.row(perm[i]) = m.row(i).
DenseMatrix permute_rows(const DenseMatrix& m, const std::vector<std::size_t>& perm);

// Naive triple loop.
DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b);
// m^p by repeated naive multiplication (m^0 = I).
DenseMatrix naive_power(const DenseMatrix& m, int p);

struct CsbmOptions {
  std::size_t nodes = 300;
  std::size_t classes = 3;
  std::size_t features = 20;
  double avg_degree = 6.0;
  double homophily = 0.8;      // probability an edge joins same-class nodes
  double feature_signal = 0.5; // class-mean scale relative to unit noise
  double train_frac = 0.6;
  double val_frac = 0.2;
  std::size_t num_splits = 1;
  std::uint64_t seed = 7;
};

// Contextual stochastic block model: Gaussian features around per-class means,
// edges drawn within or across classes according to `homophily`.
GraphDataset csbm_dataset(const std::string& name, const CsbmOptions& options);

// Same node/feature/class/edge counts as a published benchmark graph, random
// content. Used where only the shapes matter (timing).
GraphDataset shaped_like(const DatasetStats& stats, std::uint64_t seed);

// Three nodes, two edges, two classes, one split.
GraphDataset toy_dataset();

}  // namespace gpnet::testing
