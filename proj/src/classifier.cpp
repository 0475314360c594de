#include "gpnet/classifier.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "gpnet/error.hpp"
#include "gpnet/kernels.hpp"

namespace gpnet {

namespace {

constexpr std::string_view kCheckpointMagic = "GPNET:CKPT:v001\n";

void check_params(const DenseMatrix& h, const ModelParams& params) {
  if (h.cols() != params.weights.rows()) {
    throw Error(ErrorCode::kInput, fmt::format("features have {} columns but W is {}x{}", h.cols(),
                                               params.weights.rows(), params.weights.cols()));
  }
  if (params.bias && params.bias->size() != params.weights.cols()) {
    throw Error(ErrorCode::kInput, "bias length differs from the class count");
  }
}

DenseMatrix logits_of(const DenseMatrix& h, const ModelParams& params) {
  DenseMatrix logits = kernels::gemm(h, params.weights);
  if (params.bias) {
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      auto row = logits.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += (*params.bias)[c];
    }
  }
  return logits;
}

// Loss and gradient for pre-gathered rows `h` with labels `y`.
LossAndGrad loss_and_grad_gathered(const DenseMatrix& h, const ModelParams& params,
                                   std::span<const Label> y, double weight_decay) {
  const std::size_t rows = h.rows();
  const std::size_t classes = params.weights.cols();
  DenseMatrix logits = logits_of(h, params);
  DenseMatrix residual(rows, classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (y[r] >= classes) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  fmt::format("label {} out of range for {} classes", y[r], classes));
    }
    auto z = logits.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double lse = zmax + std::log(denom);
    loss += lse - z[y[r]];
    auto g = residual.row(r);
    for (std::size_t c = 0; c < classes; ++c) g[c] = std::exp(z[c] - lse);
    g[y[r]] -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(rows);
  residual *= inv;

  LossAndGrad out;
  out.loss = loss * inv;
  double sq = 0.0;
  for (double w : params.weights.values()) sq += w * w;
  out.loss += 0.5 * weight_decay * sq;

  out.grad_weights = kernels::gemm_tn(h, residual);
  auto gw = out.grad_weights.values();
  auto w = params.weights.values();
  for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += weight_decay * w[i];
  if (params.bias) {
    out.grad_bias.assign(classes, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < classes; ++c) out.grad_bias[c] += residual(r, c);
  }
  return out;
}

std::vector<Label> gather_labels(std::span<const Label> labels, std::span<const std::size_t> rows) {
  std::vector<Label> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= labels.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  fmt::format("row {} out of range ({} labels)", rows[i], labels.size()));
    }
    out[i] = labels[rows[i]];
  }
  return out;
}

double accuracy_gathered(const DenseMatrix& h, const ModelParams& params,
                         std::span<const Label> y) {
  if (h.rows() == 0) return 0.0;
  const DenseMatrix logits = logits_of(h, params);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == y[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(h.rows());
}

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, double lr, double bc1, double bc2, const AdamHyper& hyper) {
  const std::size_t n = w.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    w[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

}  // namespace

ModelParams init_params(std::size_t feature_dim, std::size_t num_classes, std::uint64_t seed,
                        bool with_bias) {
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(feature_dim + num_classes));
  std::uniform_real_distribution<double> dist(-limit, limit);
  ModelParams params{DenseMatrix(feature_dim, num_classes), std::nullopt};
  for (double& w : params.weights.values()) w = dist(rng);
  if (with_bias) params.bias = std::vector<double>(num_classes, 0.0);
  return params;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kUsage, fmt::format("learning rate must be > 0 (got {})", learning_rate));
  }
  if (weight_decay < 0.0) {
    throw Error(ErrorCode::kUsage, fmt::format("weight decay must be >= 0 (got {})", weight_decay));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::kUsage, fmt::format("dropout must be in [0, 1) (got {})", dropout));
  }
  if (epochs < 1) throw Error(ErrorCode::kUsage, fmt::format("epochs must be >= 1 (got {})", epochs));
  if (runs < 1) throw Error(ErrorCode::kUsage, fmt::format("runs must be >= 1 (got {})", runs));
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix probs(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    auto p = probs.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p[c] = std::exp(z[c] - zmax);
      denom += p[c];
    }
    for (double& v : p) v /= denom;
  }
  return probs;
}

ForwardResult forward(const DenseMatrix& h_bar, const ModelParams& params) {
  check_params(h_bar, params);
  ForwardResult out;
  out.logits = logits_of(h_bar, params);
  out.probabilities = softmax_rows(out.logits);
  return out;
}

LossAndGrad loss_and_grad(const DenseMatrix& h_bar, const ModelParams& params,
                          std::span<const Label> labels, std::span<const std::size_t> rows,
                          double weight_decay) {
  check_params(h_bar, params);
  if (rows.empty()) throw Error(ErrorCode::kInput, "loss over an empty mask");
  const auto y = gather_labels(labels, rows);
  return loss_and_grad_gathered(h_bar.gather_rows(rows), params, y, weight_decay);
}

AdamState AdamState::zeros_like(const ModelParams& params) {
  AdamState state;
  state.m = DenseMatrix(params.weights.rows(), params.weights.cols());
  state.v = DenseMatrix(params.weights.rows(), params.weights.cols());
  if (params.bias) {
    state.m_bias.assign(params.bias->size(), 0.0);
    state.v_bias.assign(params.bias->size(), 0.0);
  }
  return state;
}

void adam_step(ModelParams& params, const LossAndGrad& grad, AdamState& state,
               double learning_rate, const AdamHyper& hyper) {
  if (state.m.rows() != params.weights.rows() || state.m.cols() != params.weights.cols()) {
    state = AdamState::zeros_like(params);
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  adam_update(params.weights.values(), grad.grad_weights.values(), state.m.values(),
              state.v.values(), learning_rate, bc1, bc2, hyper);
  if (params.bias && !grad.grad_bias.empty()) {
    adam_update(*params.bias, grad.grad_bias, state.m_bias, state.v_bias, learning_rate, bc1, bc2,
                hyper);
  }
}

EvalResult evaluate(const DenseMatrix& h_bar, const ModelParams& params,
                    std::span<const Label> labels, std::span<const std::size_t> rows) {
  check_params(h_bar, params);
  if (rows.empty()) throw Error(ErrorCode::kInput, "evaluate over an empty mask");
  const auto y = gather_labels(labels, rows);
  const DenseMatrix logits = logits_of(h_bar.gather_rows(rows), params);
  EvalResult out;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto z = logits.row(r);
    const auto pred = static_cast<Label>(std::max_element(z.begin(), z.end()) - z.begin());
    out.predictions.push_back(pred);
    if (pred == y[r]) ++correct;
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
  // Single-label multi-class: micro-averaged F1 equals accuracy.
  out.micro_f1 = out.accuracy;
  return out;
}

RunResult train_run(const DenseMatrix& h_bar, std::span<const Label> labels,
                    std::size_t num_classes, const SplitRows& split, const TrainConfig& config,
                    std::uint64_t seed) {
  config.validate();
  if (split.train.empty()) throw Error(ErrorCode::kInput, "training split is empty");
  if (labels.size() != h_bar.rows()) {
    throw Error(ErrorCode::kInput, fmt::format("{} labels for {} feature rows", labels.size(),
                                               h_bar.rows()));
  }
  const DenseMatrix h_train = h_bar.gather_rows(split.train);
  const DenseMatrix h_val = h_bar.gather_rows(split.val);
  const auto y_train = gather_labels(labels, split.train);
  const auto y_val = gather_labels(labels, split.val);

  std::mt19937_64 rng(seed);
  ModelParams params = init_params(h_bar.cols(), num_classes, rng(), config.use_bias);
  AdamState state = AdamState::zeros_like(params);
  const double keep = 1.0 - config.dropout;
  std::bernoulli_distribution keep_dist(keep);
  DenseMatrix dropped = h_train;

  RunResult best{params, {}};
  best.metrics.seed = seed;
  double best_val = -1.0;
  auto& metrics = best.metrics;
  metrics.loss_curve.reserve(static_cast<std::size_t>(config.epochs));
  metrics.epoch_seconds.reserve(static_cast<std::size_t>(config.epochs));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const DenseMatrix* input = &h_train;
    if (config.dropout > 0.0) {
      auto src = h_train.values();
      auto dst = dropped.values();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = keep_dist(rng) ? src[i] / keep : 0.0;
      input = &dropped;
    }
    const auto grad = loss_and_grad_gathered(*input, params, y_train, config.weight_decay);
    if (!std::isfinite(grad.loss)) {
      throw Error(ErrorCode::kNumeric, fmt::format("non-finite loss at epoch {}", epoch));
    }
    adam_step(params, grad, state, config.learning_rate);
    const auto stop = std::chrono::steady_clock::now();
    metrics.loss_curve.push_back(grad.loss);
    metrics.epoch_seconds.push_back(std::chrono::duration<double>(stop - start).count());

    const double val = split.val.empty() ? 0.0 : accuracy_gathered(h_val, params, y_val);
    if (val > best_val) {
      best_val = val;
      best.params = params;
      metrics.selected_epoch = epoch;
    }
  }

  metrics.train_accuracy = evaluate(h_bar, best.params, labels, split.train).accuracy;
  metrics.val_accuracy = split.val.empty() ? 0.0 : best_val;
  if (!split.test.empty()) {
    const auto test = evaluate(h_bar, best.params, labels, split.test);
    metrics.test_accuracy = test.accuracy;
    metrics.test_micro_f1 = test.micro_f1;
  }
  return best;
}

TrainSummary train(const DenseMatrix& h_bar, std::span<const Label> labels,
                   std::size_t num_classes, const SplitRows& split, const TrainConfig& config) {
  config.validate();
  TrainSummary summary;
  std::vector<double> vals;
  std::vector<double> tests;
  std::vector<double> epoch_times;
  for (int r = 0; r < config.runs; ++r) {
    auto run = train_run(h_bar, labels, num_classes, split, config,
                         config.seed + static_cast<std::uint64_t>(r));
    vals.push_back(run.metrics.val_accuracy);
    tests.push_back(run.metrics.test_accuracy);
    epoch_times.insert(epoch_times.end(), run.metrics.epoch_seconds.begin(),
                       run.metrics.epoch_seconds.end());
    summary.runs.push_back(std::move(run));
  }
  summary.val_mean = mean_of(vals);
  summary.val_std = stddev_of(vals);
  summary.test_mean = mean_of(tests);
  summary.test_std = stddev_of(tests);
  summary.median_epoch_seconds = median_of(std::move(epoch_times));
  return summary;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double mu = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double median_of(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double upper = xs[mid];
  if (xs.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                      int selected_epoch, std::uint64_t seed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = io::open_out(path);
  out.write(kCheckpointMagic.data(), static_cast<std::streamsize>(kCheckpointMagic.size()));
  io::write_scalar<std::uint64_t>(out, params.weights.rows());
  io::write_scalar<std::uint64_t>(out, params.weights.cols());
  io::write_scalar<std::uint64_t>(out, static_cast<std::uint64_t>(selected_epoch));
  io::write_scalar<std::uint64_t>(out, seed);
  io::write_array<double>(out, params.weights.values());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  auto in = io::open_in(path);
  const std::string what = path.string();
  std::array<char, 16> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 16 || std::string_view(magic.data(), 16) != kCheckpointMagic) {
    throw Error(ErrorCode::kMalformed, fmt::format("{}: not a checkpoint file", what));
  }
  const auto d = io::read_scalar<std::uint64_t>(in, what);
  const auto c = io::read_scalar<std::uint64_t>(in, what);
  Checkpoint ckpt;
  ckpt.selected_epoch = static_cast<int>(io::read_scalar<std::uint64_t>(in, what));
  ckpt.seed = io::read_scalar<std::uint64_t>(in, what);
  std::vector<double> w(d * c);
  io::read_array<double>(in, w, what);
  if (!io::at_eof(in)) throw Error(ErrorCode::kCountMismatch, what + ": trailing bytes");
  ckpt.params.weights = DenseMatrix(d, c, std::move(w));
  return ckpt;
}

}  // namespace gpnet
