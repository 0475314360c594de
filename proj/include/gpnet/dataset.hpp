#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpnet/classifier.hpp"
#include "gpnet/dense_matrix.hpp"
#include "gpnet/sparse_matrix.hpp"

namespace gpnet {

struct GraphDataset {
  std::string name;
  std::size_t num_nodes = 0;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  bool features_row_normalized = false;
  std::vector<Edge> edges;  // as stored; symmetrized when the adjacency is built
  DenseMatrix features;     // num_nodes x num_features
  std::vector<Label> labels;
  std::vector<SplitRows> splits;

  std::size_t num_edges() const noexcept { return edges.size(); }

  // Throws Error with a data code on any invariant violation.
  void validate() const;
};

// Reads meta.json, edges.bin, features.bin, labels.bin and splits.json.
GraphDataset load_bundle(const std::filesystem::path& dir);
void save_bundle(const GraphDataset& dataset, const std::filesystem::path& dir);

struct SplitMasks {
  std::vector<bool> train;
  std::vector<bool> val;
  std::vector<bool> test;
};

SplitMasks select_split(const GraphDataset& dataset, std::size_t split_index);

struct DatasetStats {
  std::string_view name;
  std::size_t nodes;
  std::size_t features;
  std::size_t classes;
  std::size_t edges;
  std::size_t edge_tolerance;  // nonzero where the published count is rounded
};

// Published statistics for the benchmark graphs, matched case-insensitively.
std::optional<DatasetStats> known_stats(std::string_view name);

// Human-readable mismatches against the published statistics; empty when the
// dataset is unknown or matches.
std::vector<std::string> check_known_stats(const GraphDataset& dataset);

// Scales each row to unit L1 norm; all-zero rows are left unchanged.
void row_normalize(DenseMatrix& features);

}  // namespace gpnet
