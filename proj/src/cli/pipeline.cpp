#include "gpnet/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "gpnet/error.hpp"
#include "gpnet/feature_cache.hpp"

namespace gpnet {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Exponent sets pin down the operator; q is irrelevant when k = 1 and so on.
std::string effective_filter_key(const FilterConfig& c) {
  std::string key = fmt::format("alpha={:.17g};beta={};agg={};loops={}", c.alpha, c.beta,
                                to_string(c.aggregation), c.self_loops);
  for (int ch = 0; ch < c.m; ++ch) {
    key += fmt::format("|{}", fmt::join(exponent_set(c, static_cast<std::size_t>(ch)).exponents, ","));
  }
  return key;
}

std::string point_key(const SweepPoint& p) {
  return fmt::format("{}#lr={:.17g};dropout={:.17g};wd={:.17g};epochs={}",
                     effective_filter_key(p.filter), p.train.learning_rate, p.train.dropout,
                     p.train.weight_decay, p.train.epochs);
}

int as_int(double v, const std::string& key) {
  if (v != static_cast<double>(static_cast<int>(v))) {
    throw Error(ErrorCode::kUsage, fmt::format("grid key '{}' needs integers (got {})", key, v));
  }
  return static_cast<int>(v);
}

void apply_grid_value(SweepPoint& p, const std::string& key, double v) {
  auto channel_value = [&](std::vector<int>& list, std::size_t channel) {
    if (list.size() <= channel) list.resize(channel + 1, list.empty() ? 0 : list.back());
    list[channel] = as_int(v, key);
  };
  if (key == "lr") p.train.learning_rate = v;
  else if (key == "dropout") p.train.dropout = v;
  else if (key == "weight_decay") p.train.weight_decay = v;
  else if (key == "epochs") p.train.epochs = as_int(v, key);
  else if (key == "k") p.filter.k = as_int(v, key);
  else if (key == "m") p.filter.m = as_int(v, key);
  else if (key == "q0") p.filter.q0 = as_int(v, key);
  else if (key == "alpha") p.filter.alpha = v;
  else if (key == "beta") p.filter.beta = as_int(v, key);
  else if (key == "agg") {
    const int idx = as_int(v, key);
    if (idx < 0 || idx > 3) throw Error(ErrorCode::kUsage, "grid key 'agg' out of range");
    p.filter.aggregation = static_cast<Aggregation>(idx);
  } else if (key.size() == 2 && (key[0] == 'q' || key[0] == 'd') && key[1] >= '1' && key[1] <= '9') {
    channel_value(key[0] == 'q' ? p.filter.q : p.filter.d, static_cast<std::size_t>(key[1] - '1'));
  } else {
    throw Error(ErrorCode::kUsage, fmt::format("unknown grid key '{}'", key));
  }
}

}  // namespace

fs::path resolve_dataset_dir(const std::string& name_or_path) {
  if (fs::is_directory(name_or_path)) return name_or_path;
  if (const char* root = std::getenv("GPNET_DATA_DIR")) {
    const fs::path candidate = fs::path(root) / name_or_path;
    if (fs::is_directory(candidate)) return candidate;
  }
  throw Error(ErrorCode::kMissingFile,
              fmt::format("dataset '{}' is neither a bundle directory nor under $GPNET_DATA_DIR",
                          name_or_path));
}

GraphDataset load_dataset(const fs::path& dir, const PreprocessOptions& options) {
  GraphDataset ds = load_bundle(dir);
  if (options.row_normalize && !ds.features_row_normalized) {
    row_normalize(ds.features);
    ds.features_row_normalized = true;
  }
  return ds;
}

std::string dataset_id(const GraphDataset& dataset, const PreprocessOptions& options) {
  return fmt::format("{}-n{}-e{}-d{}{}", dataset.name, dataset.num_nodes, dataset.num_edges(),
                     dataset.num_features, options.row_normalize ? "-rn" : "");
}

PrecomputeResult precompute(const GraphDataset& dataset, const FilterConfig& config,
                            const std::string& id, const std::optional<fs::path>& cache_dir,
                            const MatrixPathOptions& matrix_options) {
  config.validate();
  PrecomputeResult out;
  const std::string fp = config_fingerprint(config, id);
  if (cache_dir) {
    out.cache_file = feature_cache_path(*cache_dir, id, fp);
    if (auto hit = load_cached_features(*cache_dir, id, fp)) {
      if (hit->h_bar.rows() == dataset.num_nodes && hit->h_bar.cols() == dataset.num_features) {
        out.features = std::move(*hit);
        out.cache_hit = true;
        return out;
      }
    }
  }
  const auto start = std::chrono::steady_clock::now();
  const SparseMatrix s = propagation_operator(dataset.edges, dataset.num_nodes, config.self_loops);
  out.features = propagate(config, s, dataset.features, id, matrix_options);
  out.seconds = seconds_since(start);
  if (cache_dir) write_features(*out.cache_file, out.features);
  return out;
}

EvaluationSummary evaluate_splits(const DenseMatrix& h_bar, const GraphDataset& dataset,
                                  const std::vector<std::size_t>& splits,
                                  const TrainConfig& config) {
  if (splits.empty()) throw Error(ErrorCode::kUsage, "no splits selected");
  EvaluationSummary out;
  std::vector<double> val, test, f1;
  for (std::size_t s : splits) {
    if (s >= dataset.splits.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  fmt::format("split {} requested but the bundle has {}", s, dataset.splits.size()));
    }
    const auto summary = train(h_bar, dataset.labels, dataset.num_classes, dataset.splits[s], config);
    for (const auto& run : summary.runs) {
      const auto& m = run.metrics;
      out.runs.push_back({s, m.seed, m.val_accuracy, m.test_accuracy, m.test_micro_f1,
                          m.selected_epoch, median_of(m.epoch_seconds)});
      val.push_back(m.val_accuracy);
      test.push_back(m.test_accuracy);
      f1.push_back(m.test_micro_f1);
    }
  }
  out.val_mean = mean_of(val);
  out.val_std = stddev_of(val);
  out.test_mean = mean_of(test);
  out.test_std = stddev_of(test);
  out.micro_f1_mean = mean_of(f1);
  return out;
}

std::vector<std::size_t> parse_split_selector(const std::string& text, const GraphDataset& dataset) {
  if (dataset.splits.empty()) throw Error(ErrorCode::kMalformed, "bundle has no splits");
  std::vector<std::size_t> out;
  if (text == "all") {
    for (std::size_t s = 0; s < dataset.splits.size(); ++s) out.push_back(s);
    return out;
  }
  std::size_t idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoul(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUsage, fmt::format("--split expects an index or 'all' (got '{}')", text));
  }
  if (idx >= dataset.splits.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("split {} requested but the bundle has {}", idx, dataset.splits.size()));
  }
  out.push_back(idx);
  return out;
}

int filter_terms(const FilterConfig& config) { return config.m * config.k; }

GridSpec default_grid() {
  return {
      {"lr", {0.0003, 0.01, 0.05, 0.1}},
      {"dropout", {0, 0.1, 0.3, 0.8, 0.95}},
      {"weight_decay", {1e-10, 1e-7, 7e-6, 5e-5, 6e-5, 1e-4, 2e-4, 5e-4, 6e-3}},
      {"epochs", {700, 800, 1000, 1200, 2000, 2200, 5000, 7000, 50000}},
      {"k", {2, 3, 4, 5, 7, 8, 9, 13}},
      {"m", {2, 3}},
      {"q0", {1}},
      {"q1", {2, 4, 5}},
      {"q2", {2, 5, 6}},
      {"q3", {6}},
      {"d1", {0}},
      {"d2", {1, 3}},
      {"d3", {6, 9}},
      {"agg", {0, 1, 2, 3}},
  };
}

GridSpec read_grid_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, fmt::format("missing grid file {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorCode::kMalformed, "grid file must hold a JSON object");
  GridSpec spec;
  for (const auto& [key, values] : doc.items()) {
    if (!values.is_array() || values.empty()) {
      throw Error(ErrorCode::kMalformed, fmt::format("grid key '{}' needs a non-empty array", key));
    }
    auto& list = spec[key];
    for (const auto& v : values) {
      if (key == "agg" && v.is_string()) {
        list.push_back(static_cast<double>(parse_aggregation(v.get<std::string>())));
      } else if (v.is_number()) {
        list.push_back(v.get<double>());
      } else {
        throw Error(ErrorCode::kMalformed, fmt::format("grid key '{}' has a non-numeric entry", key));
      }
    }
  }
  return spec;
}

std::size_t grid_size(const GridSpec& spec) {
  std::size_t total = 1;
  for (const auto& [key, values] : spec) total *= values.size();
  return total;
}

std::vector<SweepPoint> expand_grid(const GridSpec& spec, const SweepPoint& base) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& [key, values] : spec) {
    std::vector<double> unique;
    for (double v : values)
      if (std::find(unique.begin(), unique.end(), v) == unique.end()) unique.push_back(v);
    axes.emplace_back(key, std::move(unique));
  }
  std::vector<SweepPoint> out;
  std::set<std::string> seen;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    SweepPoint p = base;
    for (std::size_t a = 0; a < axes.size(); ++a) apply_grid_value(p, axes[a].first, axes[a].second[idx[a]]);
    const auto m = static_cast<std::size_t>(std::max(p.filter.m, 1));
    if (p.filter.q.size() < m) p.filter.q.resize(m, p.filter.q.empty() ? 1 : p.filter.q.back());
    if (p.filter.d.size() < m) p.filter.d.resize(m, 0);
    p.filter.q.resize(m);
    p.filter.d.resize(m);
    p.filter.validate();
    p.train.validate();
    if (seen.insert(point_key(p)).second) out.push_back(std::move(p));

    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  return out;
}

std::vector<SweepResult> run_sweep(const GraphDataset& dataset, const std::vector<SweepPoint>& points,
                                   const SweepOptions& options) {
  // Visit points grouped by filter so each H_bar is propagated once.
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::string> keys;
  for (const auto& p : points) keys.push_back(p.filter.canonical());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  const std::string id = dataset_id(dataset, options.preprocess);
  std::vector<SweepResult> results(points.size());
  std::string current_key;
  DenseMatrix h_bar;
  bool hit = false;
  std::size_t done = 0;
  for (std::size_t i : order) {
    if (keys[i] != current_key || done == 0) {
      auto pre = precompute(dataset, points[i].filter, id, options.cache_dir, options.matrix);
      h_bar = options.relu ? relu(std::move(pre.features.h_bar)) : std::move(pre.features.h_bar);
      hit = pre.cache_hit;
      current_key = keys[i];
    }
    results[i] = {points[i], evaluate_splits(h_bar, dataset, options.splits, points[i].train), hit};
    ++done;
    if (options.progress) options.progress(done, points.size(), results[i]);
  }
  return results;
}

std::size_t select_best(const std::vector<SweepResult>& results) {
  if (results.empty()) throw Error(ErrorCode::kUsage, "empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const auto& a = results[i];
    const auto& b = results[best];
    const auto rank = [](const SweepResult& r) {
      return std::tuple(-r.summary.val_mean, filter_terms(r.point.filter), r.point.filter.k);
    };
    if (rank(a) < rank(b)) best = i;
  }
  return best;
}

void write_sweep_csv(const std::vector<SweepResult>& results, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << "index,m,k,q0,q,d,alpha,beta,agg,self_loops,lr,dropout,weight_decay,epochs,terms,"
         "val_mean,val_std,test_mean,test_std\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& f = results[i].point.filter;
    const auto& t = results[i].point.train;
    const auto& s = results[i].summary;
    out << fmt::format("{},{},{},{},{},{},{:.17g},{},{},{},{:.17g},{:.17g},{:.17g},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                       i, f.m, f.k, f.q0, fmt::join(f.q, ";"), fmt::join(f.d, ";"), f.alpha, f.beta,
                       to_string(f.aggregation), f.self_loops ? "on" : "off", t.learning_rate,
                       t.dropout, t.weight_decay, t.epochs, filter_terms(f), s.val_mean, s.val_std,
                       s.test_mean, s.test_std);
  }
  if (!out) throw Error(ErrorCode::kIo, fmt::format("write to {} failed", path.string()));
}

double median_epoch_seconds(const DenseMatrix& h_bar, const GraphDataset& dataset,
                            std::size_t split, const TrainConfig& config, int warmup,
                            int timed_epochs) {
  if (warmup < 0 || timed_epochs < 1) throw Error(ErrorCode::kUsage, "bad epoch counts for timing");
  if (split >= dataset.splits.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, fmt::format("split {} out of range", split));
  }
  TrainConfig cfg = config;
  cfg.epochs = warmup + timed_epochs;
  const auto run = train_run(h_bar, dataset.labels, dataset.num_classes, dataset.splits[split], cfg,
                             cfg.seed);
  const auto& secs = run.metrics.epoch_seconds;
  return median_of(std::vector<double>(secs.begin() + warmup, secs.end()));
}

}  // namespace gpnet
