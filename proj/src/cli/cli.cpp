#include "gpnet/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "gpnet/error.hpp"
#include "gpnet/feature_cache.hpp"
#include "gpnet/pipeline.hpp"
#include "gpnet/spectral.hpp"

namespace gpnet::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr std::size_t kDefaultGridCap = 1000;

struct FilterFlags {
  int m = 1;
  int k = 2;
  int q0 = 1;
  std::string q = "2";
  std::string d = "0";
  double alpha = 1.0;
  int beta = 1;
  std::string agg = "sum";
  std::string self_loops = "on";

  FilterConfig build() const {
    FilterConfig c;
    c.m = m;
    c.k = k;
    c.q0 = q0;
    c.q = parse_list(q, "--q");
    c.d = parse_list(d, "--d");
    c.alpha = alpha;
    c.beta = beta;
    c.aggregation = parse_aggregation(agg);
    c.self_loops = self_loops == "on";
    c.validate();
    return c;
  }

  static std::vector<int> parse_list(const std::string& text, const char* flag) {
    std::vector<int> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      try {
        std::size_t used = 0;
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kUsage,
                    fmt::format("{} expects a comma separated list of integers (got '{}')", flag, text));
      }
    }
    if (out.empty()) throw Error(ErrorCode::kUsage, fmt::format("{} is empty", flag));
    return out;
  }
};

struct TrainFlags {
  TrainConfig config;
  bool relu = false;
};

struct Common {
  std::string dataset;
  std::string split = "0";
  std::string cache_dir;
  std::string out;
  bool row_normalize = false;
  double memory_cap_mb = 3072;

  MatrixPathOptions matrix() const {
    MatrixPathOptions o;
    o.memory_cap_bytes = static_cast<std::size_t>(memory_cap_mb * 1024 * 1024);
    return o;
  }
  std::optional<fs::path> cache() const {
    if (const char* env = std::getenv("GPNET_CACHE_DIR"); env && *env) return fs::path(env);
    if (!cache_dir.empty()) return fs::path(cache_dir);
    return std::nullopt;
  }
  PreprocessOptions preprocess() const { return {row_normalize}; }
};

void add_common(CLI::App* app, Common& c, bool needs_split = true) {
  app->add_option("--dataset", c.dataset, "bundle directory, or a name under $GPNET_DATA_DIR")
      ->required();
  if (needs_split) app->add_option("--split", c.split, "split index or 'all'")->capture_default_str();
  app->add_option("--cache-dir", c.cache_dir, "propagated feature cache ($GPNET_CACHE_DIR wins)");
  app->add_flag("--row-normalize", c.row_normalize, "L1-normalize feature rows after loading");
  app->add_option("--memory-cap-mb", c.memory_cap_mb, "budget for max/min channel slabs")
      ->capture_default_str();
}

void add_filter(CLI::App* app, FilterFlags& f) {
  app->add_option("--m", f.m, "channels")->capture_default_str();
  app->add_option("--k", f.k, "terms per channel")->capture_default_str();
  app->add_option("--q0", f.q0, "first item coefficient")->capture_default_str();
  app->add_option("--q", f.q, "common ratios, one per channel")->capture_default_str();
  app->add_option("--d", f.d, "neighborhood coefficients, one per channel")->capture_default_str();
  app->add_option("--alpha", f.alpha, "self-attention score")->capture_default_str();
  app->add_option("--beta", f.beta, "sign factor, +1 or -1")->capture_default_str();
  app->add_option("--agg", f.agg, "aggregation")
      ->check(CLI::IsMember({"max", "min", "avg", "sum", "max-fp", "min-fp", "avg-fp", "sum-fp"},
                            CLI::ignore_case))
      ->capture_default_str();
  app->add_option("--self-loops", f.self_loops, "on or off")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
}

void add_train(CLI::App* app, TrainFlags& t) {
  auto& c = t.config;
  app->add_option("--lr", c.learning_rate, "learning rate")->capture_default_str();
  app->add_option("--dropout", c.dropout, "dropout on H_bar during training")->capture_default_str();
  app->add_option("--weight-decay", c.weight_decay, "L2 factor")->capture_default_str();
  app->add_option("--epochs", c.epochs, "epochs per run")->capture_default_str();
  app->add_option("--runs", c.runs, "seeds per split")->capture_default_str();
  app->add_option("--seed", c.seed, "first seed")->capture_default_str();
  app->add_flag("--bias", c.use_bias, "add a bias to the linear layer");
  app->add_flag("--relu", t.relu, "apply ReLU to H_bar before training");
}

json filter_json(const FilterConfig& c) {
  return {{"m", c.m},         {"k", c.k},       {"q0", c.q0},
          {"q", c.q},         {"d", c.d},       {"alpha", c.alpha},
          {"beta", c.beta},   {"aggregation", to_string(c.aggregation)},
          {"self_loops", c.self_loops}};
}

json train_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"dropout", c.dropout},             {"epochs", c.epochs},
          {"runs", c.runs},                   {"seed", c.seed},
          {"bias", c.use_bias}};
}

json summary_json(const EvaluationSummary& s) {
  json runs = json::array();
  for (const auto& r : s.runs) {
    runs.push_back({{"split", r.split},
                    {"seed", r.seed},
                    {"val_accuracy", r.val_accuracy},
                    {"test_accuracy", r.test_accuracy},
                    {"test_micro_f1", r.test_micro_f1},
                    {"selected_epoch", r.selected_epoch},
                    {"median_epoch_seconds", r.median_epoch_seconds}});
  }
  return {{"val_mean", s.val_mean},   {"val_std", s.val_std},
          {"test_mean", s.test_mean}, {"test_std", s.test_std},
          {"micro_f1_mean", s.micro_f1_mean}, {"runs", runs}};
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
}

std::string pct(double mean, double sd) { return fmt::format("{:.2f} ± {:.2f}", 100 * mean, 100 * sd); }

int cmd_precompute(const Common& common, const FilterFlags& ff, std::ostream& out) {
  const auto filter = ff.build();
  const auto ds = load_dataset(resolve_dataset_dir(common.dataset), common.preprocess());
  const auto cache = common.cache();
  if (!cache && common.out.empty()) {
    throw Error(ErrorCode::kUsage, "precompute needs --cache-dir, $GPNET_CACHE_DIR or --out");
  }
  const auto id = dataset_id(ds, common.preprocess());
  const auto pre = precompute(ds, filter, id, cache, common.matrix());
  if (pre.cache_hit) {
    out << fmt::format("cache hit: {}\n", pre.cache_file->string());
  } else {
    out << fmt::format("propagation wall time: {:.6f} s\n", pre.seconds);
    if (pre.cache_file) out << fmt::format("cached: {}\n", pre.cache_file->string());
  }
  if (!common.out.empty()) write_features(common.out, pre.features);
  out << fmt::format("rows {} cols {} fingerprint {}\n", pre.features.h_bar.rows(),
                     pre.features.h_bar.cols(), pre.features.fingerprint);
  return 0;
}

int cmd_train(const Common& common, const FilterFlags& ff, const TrainFlags& tf,
              const std::string& checkpoint, std::ostream& out) {
  const auto filter = ff.build();
  tf.config.validate();
  const auto ds = load_dataset(resolve_dataset_dir(common.dataset), common.preprocess());
  const auto splits = parse_split_selector(common.split, ds);
  const auto pre =
      precompute(ds, filter, dataset_id(ds, common.preprocess()), common.cache(), common.matrix());
  const DenseMatrix h_bar = tf.relu ? relu(pre.features.h_bar) : pre.features.h_bar;
  const auto summary = evaluate_splits(h_bar, ds, splits, tf.config);

  out << fmt::format("dataset {}  splits {}  runs/split {}\n", ds.name, splits.size(), tf.config.runs);
  out << fmt::format("filter {}\n", filter.canonical());
  out << fmt::format("{:<10}{}\n", "val", pct(summary.val_mean, summary.val_std));
  out << fmt::format("{:<10}{}\n", "test", pct(summary.test_mean, summary.test_std));
  out << fmt::format("{:<10}{:.2f}\n", "micro-F1", 100 * summary.micro_f1_mean);

  if (!common.out.empty()) {
    json doc = {{"schema_version", kSchemaVersion},
                {"command", "train"},
                {"dataset", ds.name},
                {"splits", splits},
                {"filter", filter_json(filter)},
                {"train", train_json(tf.config)},
                {"relu", tf.relu},
                {"precompute_seconds", pre.seconds},
                {"cache_hit", pre.cache_hit},
                {"metrics", summary_json(summary)}};
    write_json(common.out, doc);
  }
  if (!checkpoint.empty()) {
    // The first run of the first split.
    const auto& split = ds.splits[splits.front()];
    const auto run = train_run(h_bar, ds.labels, ds.num_classes, split, tf.config, tf.config.seed);
    write_checkpoint(checkpoint, run.params, run.metrics.selected_epoch, run.metrics.seed);
  }
  return 0;
}

int cmd_sweep(const Common& common, const FilterFlags& ff, const TrainFlags& tf,
              const std::string& grid_path, bool allow_large, std::size_t cap, std::ostream& out,
              std::ostream& err) {
  SweepPoint base{ff.build(), tf.config};
  GridSpec spec = default_grid();
  if (!grid_path.empty()) {
    for (auto& [key, values] : read_grid_spec(grid_path)) spec[key] = values;
  }
  const std::size_t raw = grid_size(spec);
  if (raw > cap && !allow_large) {
    throw Error(ErrorCode::kUsage,
                fmt::format("grid has {} combinations, above the cap of {}; narrow it with --grid "
                            "or pass --allow-large",
                            raw, cap));
  }
  const auto points = expand_grid(spec, base);
  const auto ds = load_dataset(resolve_dataset_dir(common.dataset), common.preprocess());
  SweepOptions opts;
  opts.splits = parse_split_selector(common.split, ds);
  opts.cache_dir = common.cache();
  opts.preprocess = common.preprocess();
  opts.relu = tf.relu;
  opts.matrix = common.matrix();
  opts.progress = [&](std::size_t done, std::size_t total, const SweepResult& r) {
    err << fmt::format("[{}/{}] val {:.2f} {}\n", done, total, 100 * r.summary.val_mean,
                       r.point.filter.canonical());
  };
  const auto results = run_sweep(ds, points, opts);
  const std::size_t best = select_best(results);
  const auto& b = results[best];

  out << fmt::format("{} configurations ({} before deduplication)\n", points.size(), raw);
  out << fmt::format("best #{}: {}\n", best, b.point.filter.canonical());
  out << fmt::format("  lr {} dropout {} weight_decay {} epochs {}\n", b.point.train.learning_rate,
                     b.point.train.dropout, b.point.train.weight_decay, b.point.train.epochs);
  out << fmt::format("  val {}  test {}\n", pct(b.summary.val_mean, b.summary.val_std),
                     pct(b.summary.test_mean, b.summary.test_std));
  if (!common.out.empty()) {
    write_sweep_csv(results, common.out);
    write_json(fs::path(common.out).replace_extension(".best.json"),
               {{"schema_version", kSchemaVersion},
                {"command", "sweep"},
                {"dataset", ds.name},
                {"splits", opts.splits},
                {"configurations", points.size()},
                {"best_index", best},
                {"filter", filter_json(b.point.filter)},
                {"train", train_json(b.point.train)},
                {"metrics", summary_json(b.summary)}});
  }
  return 0;
}

int cmd_spectrum(const Common& common, const FilterFlags& ff, std::ostream& out) {
  const auto filter = ff.build();
  if (common.out.empty()) throw Error(ErrorCode::kUsage, "spectrum needs --out");
  const auto ds = load_bundle(resolve_dataset_dir(common.dataset));
  const auto s = propagation_operator(ds.edges, ds.num_nodes, filter.self_loops);
  const auto report = spectrum_report(filter, s);
  emit_spectrum_csv(report, common.out);
  out << fmt::format("{} eigenvalues in [{:.6f}, {:.6f}]\n", report.eigenvalues.size(),
                     report.eigenvalues.front(), report.eigenvalues.back());
  out << fmt::format("filter class: {}{}\n", to_string(report.filter_class),
                     report.per_channel_only ? " (per channel; max/min has no joint response)" : "");
  for (std::size_t c = 0; c < report.channel_classes.size(); ++c) {
    out << fmt::format("  channel {}: {}\n", c + 1, to_string(report.channel_classes[c]));
  }
  return 0;
}

int cmd_bench(const Common& common, const FilterFlags& ff, const TrainFlags& tf, int warmup,
              std::ostream& out) {
  const auto gpnet = ff.build();
  const auto ds = load_dataset(resolve_dataset_dir(common.dataset), common.preprocess());
  const auto split = parse_split_selector(common.split, ds).front();
  if (tf.config.epochs < 100) throw Error(ErrorCode::kUsage, "bench needs --epochs >= 100");
  const auto id = dataset_id(ds, common.preprocess());

  struct Row {
    std::string name;
    FilterConfig filter;
    double precompute = 0.0;
    double epoch = 0.0;
  };
  std::vector<Row> rows{{"gpnet", gpnet},
                        {"sgc-reduction", sgc_config(2, gpnet.self_loops)},
                        {"mlp-reduction", mlp_config(0.0, 1)}};
  for (auto& row : rows) {
    const auto pre = precompute(ds, row.filter, id, common.cache(), common.matrix());
    row.precompute = pre.seconds;
    row.epoch = median_epoch_seconds(pre.features.h_bar, ds, split, tf.config, warmup,
                                     tf.config.epochs);
  }
  const double sgc = rows[1].epoch;
  out << fmt::format("{:<16}{:>16}{:>18}{:>10}\n", "model", "precompute s", "epoch median ms",
                     "vs sgc");
  json doc = {{"schema_version", kSchemaVersion}, {"command", "bench"}, {"dataset", ds.name},
              {"warmup", warmup},                 {"epochs", tf.config.epochs}};
  for (const auto& row : rows) {
    out << fmt::format("{:<16}{:>16.4f}{:>18.4f}{:>10.3f}\n", row.name, row.precompute,
                       1e3 * row.epoch, row.epoch / sgc);
    doc["models"][row.name] = {{"filter", filter_json(row.filter)},
                               {"precompute_seconds", row.precompute},
                               {"median_epoch_seconds", row.epoch},
                               {"ratio_to_sgc", row.epoch / sgc}};
  }
  if (!common.out.empty()) write_json(common.out, doc);
  return 0;
}

int cmd_validate(const Common& common, std::ostream& out, std::ostream& err) {
  const auto ds = load_bundle(resolve_dataset_dir(common.dataset));
  out << fmt::format("{}: {} nodes, {} edges, {} features, {} classes, {} splits\n", ds.name,
                     ds.num_nodes, ds.num_edges(), ds.num_features, ds.num_classes, ds.splits.size());
  const auto problems = check_known_stats(ds);
  if (!known_stats(ds.name)) {
    err << fmt::format("warning: no published statistics for '{}'\n", ds.name);
    return 0;
  }
  if (!problems.empty()) {
    for (const auto& p : problems) err << "mismatch: " << p << '\n';
    return exit_code_for(ErrorCode::kCountMismatch);
  }
  out << "matches the published statistics\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GPNet: geometric polynomial filters with a linear classifier", "gpnet"};
  app.require_subcommand(1);

  Common common;
  FilterFlags ff;
  TrainFlags tf;
  TrainFlags bench_tf;
  bench_tf.config.epochs = 100;
  std::string grid, checkpoint;
  bool allow_large = false;
  std::size_t cap = kDefaultGridCap;
  int warmup = 10;

  auto* pre = app.add_subcommand("precompute", "propagate features and cache H_bar");
  add_common(pre, common, false);
  add_filter(pre, ff);
  pre->add_option("--out", common.out, "also write H_bar to this file");

  auto* tr = app.add_subcommand("train", "train and report mean/std over runs");
  add_common(tr, common);
  add_filter(tr, ff);
  add_train(tr, tf);
  tr->add_option("--out", common.out, "metrics JSON");
  tr->add_option("--checkpoint", checkpoint, "write the first run's selected weights");

  auto* sw = app.add_subcommand("sweep", "grid search with validation-based selection");
  add_common(sw, common);
  add_filter(sw, ff);
  add_train(sw, tf);
  sw->add_option("--grid", grid, "JSON object of key -> value list; absent keys use the full default grid");
  sw->add_option("--out", common.out, "results CSV");
  sw->add_flag("--allow-large", allow_large, "permit grids above --max-configs");
  sw->add_option("--max-configs", cap, "grid size cap")->capture_default_str();

  auto* sp = app.add_subcommand("spectrum", "frequency response CSV");
  add_common(sp, common, false);
  add_filter(sp, ff);
  sp->add_option("--out", common.out, "CSV path");

  auto* be = app.add_subcommand("bench", "per-epoch training time: gpnet vs reductions");
  add_common(be, common);
  add_filter(be, ff);
  add_train(be, bench_tf);
  be->add_option("--warmup", warmup, "untimed epochs")->capture_default_str();
  be->add_option("--out", common.out, "timing JSON");

  auto* va = app.add_subcommand("validate-bundle", "check a bundle and its published statistics");
  add_common(va, common, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(ErrorCode::kUsage);
  }

  try {
    if (pre->parsed()) return cmd_precompute(common, ff, out);
    if (tr->parsed()) return cmd_train(common, ff, tf, checkpoint, out);
    if (sw->parsed()) return cmd_sweep(common, ff, tf, grid, allow_large, cap, out, err);
    if (sp->parsed()) return cmd_spectrum(common, ff, out);
    if (be->parsed()) return cmd_bench(common, ff, bench_tf, warmup, out);
    if (va->parsed()) return cmd_validate(common, out, err);
  } catch (const Error& e) {
    err << fmt::format("error ({}): {}\n", to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    err << "error (resource): out of memory\n";
    return exit_code_for(ErrorCode::kResource);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(ErrorCode::kIo);
  }
  return exit_code_for(ErrorCode::kUsage);
}

}  // namespace gpnet::cli
