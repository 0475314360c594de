#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gpnet/dense_matrix.hpp"

namespace gpnet {

using Label = std::uint16_t;

struct ModelParams {
  DenseMatrix weights;               // feature_dim x num_classes
  std::optional<std::vector<double>> bias;
};

// Glorot-uniform weights in +-sqrt(6 / (d + C)); bias (if requested) zero.
ModelParams init_params(std::size_t feature_dim, std::size_t num_classes, std::uint64_t seed,
                        bool with_bias = false);

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.0;  // in [0, 1)
  int epochs = 200;
  std::uint64_t seed = 42;
  int runs = 10;
  bool use_bias = false;

  // Throws Error(kUsage).
  void validate() const;
};

struct ForwardResult {
  DenseMatrix logits;
  DenseMatrix probabilities;
};

// Row-wise softmax of a logit matrix (max-shifted).
DenseMatrix softmax_rows(const DenseMatrix& logits);

ForwardResult forward(const DenseMatrix& h_bar, const ModelParams& params);

struct LossAndGrad {
  double loss = 0.0;
  DenseMatrix grad_weights;
  std::vector<double> grad_bias;  // empty without bias
};

// Mean cross entropy over `rows` plus (weight_decay / 2) ||W||_F^2, and its
// gradient H_rows^T (P - Y) / |rows| + weight_decay W.
LossAndGrad loss_and_grad(const DenseMatrix& h_bar, const ModelParams& params,
                          std::span<const Label> labels, std::span<const std::size_t> rows,
                          double weight_decay);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  DenseMatrix m;
  DenseMatrix v;
  std::vector<double> m_bias;
  std::vector<double> v_bias;
  long step = 0;

  static AdamState zeros_like(const ModelParams& params);
};

// One bias-corrected Adam update; increments state.step first.
void adam_step(ModelParams& params, const LossAndGrad& grad, AdamState& state,
               double learning_rate, const AdamHyper& hyper = {});

struct EvalResult {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  std::vector<Label> predictions;  // one per row in `rows`
};

// Argmax prediction with ties going to the lowest class index.
EvalResult evaluate(const DenseMatrix& h_bar, const ModelParams& params,
                    std::span<const Label> labels, std::span<const std::size_t> rows);

struct SplitRows {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

struct Metrics {
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_micro_f1 = 0.0;
  int selected_epoch = 0;  // 1-based
  std::uint64_t seed = 0;
  std::vector<double> loss_curve;
  std::vector<double> epoch_seconds;
};

struct RunResult {
  ModelParams params;
  Metrics metrics;
};

// Trains for `config.epochs` full-batch epochs from `seed` and keeps the weights
// of the epoch with the best validation accuracy (earliest on ties).
// Throws Error(kNumeric) on a non-finite loss.
RunResult train_run(const DenseMatrix& h_bar, std::span<const Label> labels,
                    std::size_t num_classes, const SplitRows& split, const TrainConfig& config,
                    std::uint64_t seed);

struct TrainSummary {
  std::vector<RunResult> runs;  // seeds config.seed, config.seed + 1, ...
  double val_mean = 0.0;
  double val_std = 0.0;
  double test_mean = 0.0;
  double test_std = 0.0;
  double median_epoch_seconds = 0.0;
};

TrainSummary train(const DenseMatrix& h_bar, std::span<const Label> labels,
                   std::size_t num_classes, const SplitRows& split, const TrainConfig& config);

// Population mean / standard deviation.
double mean_of(std::span<const double> xs);
double stddev_of(std::span<const double> xs);
double median_of(std::vector<double> xs);

// Layout, little endian: 16-byte magic "GPNET:CKPT:v001\n", then u64 d, u64 C,
// u64 selected epoch, u64 seed, then d*C float64 weights row-major.
// The optional bias is not stored.
void write_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                      int selected_epoch, std::uint64_t seed);

struct Checkpoint {
  ModelParams params;
  int selected_epoch = 0;
  std::uint64_t seed = 0;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace gpnet
