#pragma once

// Dataset -> propagation -> training orchestration shared by the CLI,
// the acceptance harness and the benchmarks.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpnet/classifier.hpp"
#include "gpnet/dataset.hpp"
#include "gpnet/filter_config.hpp"
#include "gpnet/geometric_filter.hpp"

namespace gpnet {

// Resolves `name_or_path`: an existing directory is used as is, otherwise
// $GPNET_DATA_DIR/<name>. Throws Error(kMissingFile) when neither exists.
std::filesystem::path resolve_dataset_dir(const std::string& name_or_path);

struct PreprocessOptions {
  bool row_normalize = false;
};

// Loads, validates and optionally row-normalizes a bundle.
GraphDataset load_dataset(const std::filesystem::path& dir, const PreprocessOptions& options = {});

// Cache key component identifying the dataset content shape and preprocessing.
std::string dataset_id(const GraphDataset& dataset, const PreprocessOptions& options = {});

struct PrecomputeResult {
  PropagatedFeatures features;
  bool cache_hit = false;
  double seconds = 0.0;  // propagation time; 0 on a cache hit
  std::optional<std::filesystem::path> cache_file;
};

// H_bar for `config`, read from / written to `cache_dir` when given.
PrecomputeResult precompute(const GraphDataset& dataset, const FilterConfig& config,
                            const std::string& id,
                            const std::optional<std::filesystem::path>& cache_dir,
                            const MatrixPathOptions& matrix_options = {});

struct RunRecord {
  std::size_t split = 0;
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_micro_f1 = 0.0;
  int selected_epoch = 0;
  double median_epoch_seconds = 0.0;
};

struct EvaluationSummary {
  std::vector<RunRecord> runs;
  double val_mean = 0.0;
  double val_std = 0.0;
  double test_mean = 0.0;
  double test_std = 0.0;
  double micro_f1_mean = 0.0;
};

// Trains `config.runs` seeds on every listed split; statistics are over all
// split x run pairs.
EvaluationSummary evaluate_splits(const DenseMatrix& h_bar, const GraphDataset& dataset,
                                  const std::vector<std::size_t>& splits,
                                  const TrainConfig& config);

// "all" -> every split; otherwise a single index.
std::vector<std::size_t> parse_split_selector(const std::string& text, const GraphDataset& dataset);

struct SweepPoint {
  FilterConfig filter;
  TrainConfig train;
};

// Number of propagation terms m * k; the sweep prefers smaller filters on ties.
int filter_terms(const FilterConfig& config);

// Value lists per grid key. Keys: lr, dropout, weight_decay, epochs, k, m, q0,
// q1..q3, d1..d3, alpha, beta, agg.
using GridSpec = std::map<std::string, std::vector<double>>;

// Full search space; alpha and beta are not part of it.
GridSpec default_grid();

// Reads a JSON object of key -> array. Aggregations may be given as strings.
GridSpec read_grid_spec(const std::filesystem::path& path);

// Product of list lengths before deduplication.
std::size_t grid_size(const GridSpec& spec);

// Cartesian product over `spec`; keys absent from `spec` keep the value in
// `base`. Channel parameters beyond m are ignored and the resulting duplicates
// dropped, keeping first occurrences in product order.
std::vector<SweepPoint> expand_grid(const GridSpec& spec, const SweepPoint& base);

struct SweepResult {
  SweepPoint point;
  EvaluationSummary summary;
  bool cache_hit = false;
};

struct SweepOptions {
  std::vector<std::size_t> splits{0};
  std::optional<std::filesystem::path> cache_dir;
  PreprocessOptions preprocess;
  bool relu = false;
  MatrixPathOptions matrix;
  std::function<void(std::size_t done, std::size_t total, const SweepResult&)> progress;
};

// Evaluates every point (propagation shared between points with the same
// filter). Results come back in input order.
std::vector<SweepResult> run_sweep(const GraphDataset& dataset, const std::vector<SweepPoint>& points,
                                   const SweepOptions& options);

// Highest mean validation accuracy; ties go to fewer filter terms, then the
// smaller k, then the earlier point.
std::size_t select_best(const std::vector<SweepResult>& results);

void write_sweep_csv(const std::vector<SweepResult>& results, const std::filesystem::path& path);

// Median seconds per training epoch, after `warmup` untimed epochs.
double median_epoch_seconds(const DenseMatrix& h_bar, const GraphDataset& dataset,
                            std::size_t split, const TrainConfig& config, int warmup,
                            int timed_epochs);

}  // namespace gpnet
