#include <doctest.h>

#include <filesystem>

#include "../support/synthetic.hpp"
#include "gpnet/error.hpp"
#include "gpnet/pipeline.hpp"

using namespace gpnet;
namespace fs = std::filesystem;

namespace {

SweepPoint base_point() {
  SweepPoint p;
  p.train.learning_rate = 0.05;
  p.train.epochs = 200;
  p.train.runs = 2;
  return p;
}

// Best validation accuracy among sweep points with the given beta.
double best_val_for_beta(const std::vector<SweepResult>& results, int beta) {
  double best = -1.0;
  for (const auto& r : results)
    if (r.point.filter.beta == beta) best = std::max(best, r.summary.val_mean);
  return best;
}

}  // namespace

TEST_CASE("expand_grid: product, channel fill, deduplication") {
  SweepPoint base;
  GridSpec spec{{"m", {1, 2}}, {"q1", {2, 4}}, {"q2", {3}}, {"d2", {1}}, {"k", {1, 2}}};
  CHECK(grid_size(spec) == 8);
  const auto points = expand_grid(spec, base);
  // k = 1 makes q irrelevant: m=1 gives {k1} + {k2,q2} + {k2,q4}; m=2 likewise.
  CHECK(points.size() == 6);
  for (const auto& p : points) {
    CHECK(p.filter.q.size() == static_cast<std::size_t>(p.filter.m));
    CHECK(p.filter.d.size() == static_cast<std::size_t>(p.filter.m));
  }
  const auto& two = points.back();
  CHECK(two.filter.m == 2);
  CHECK(two.filter.q[1] == 3);
  CHECK(two.filter.d[1] == 1);

  const auto dup = expand_grid({{"lr", {0.1, 0.1, 0.2}}}, base);
  CHECK(dup.size() == 2);

  CHECK_THROWS_AS(expand_grid({{"nonsense", {1}}}, base), Error);
  CHECK_THROWS_AS(expand_grid({{"k", {1.5}}}, base), Error);
  CHECK_THROWS_AS(expand_grid({{"q1", {0}}}, base), Error);
  CHECK(grid_size(default_grid()) > 1000000);
}

TEST_CASE("select_best prefers validation, then fewer terms, then smaller k") {
  auto result = [](double val, int m, int k) {
    SweepResult r;
    r.point.filter.m = m;
    r.point.filter.k = k;
    r.summary.val_mean = val;
    return r;
  };
  CHECK(select_best({result(0.5, 1, 2), result(0.7, 3, 9), result(0.6, 1, 1)}) == 1);
  CHECK(select_best({result(0.7, 2, 3), result(0.7, 1, 4)}) == 1);
  CHECK(select_best({result(0.7, 2, 2), result(0.7, 1, 4)}) == 0);
  CHECK(select_best({result(0.7, 1, 2), result(0.7, 1, 2)}) == 0);
}

TEST_CASE("bundle -> precompute -> train on the toy graph") {
  const auto dir = fs::temp_directory_path() / "gpnet_test_pipeline";
  fs::remove_all(dir);
  save_bundle(gpnet::testing::toy_dataset(), dir / "toy");
  const auto ds = load_dataset(dir / "toy");
  const auto id = dataset_id(ds);
  const auto first = precompute(ds, FilterConfig{}, id, dir / "cache");
  CHECK_FALSE(first.cache_hit);
  const auto second = precompute(ds, FilterConfig{}, id, dir / "cache");
  CHECK(second.cache_hit);
  CHECK(second.features.h_bar == first.features.h_bar);

  TrainConfig t;
  t.epochs = 20;
  t.runs = 3;
  const auto summary = evaluate_splits(first.features.h_bar, ds, {0}, t);
  CHECK(summary.runs.size() == 3);
  CHECK(summary.test_mean >= 0.0);
  CHECK(summary.test_mean <= 1.0);
  CHECK(parse_split_selector("all", ds) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(parse_split_selector("1", ds), Error);
  CHECK_THROWS_AS(parse_split_selector("x", ds), Error);
  fs::remove_all(dir);
}

TEST_CASE("sign factor: homophily prefers beta = +1, heterophily beta = -1") {
  GridSpec spec{{"k", {1, 2, 3}}, {"beta", {1, -1}}, {"alpha", {1}}};
  for (double homophily : {0.9, 0.1}) {
    gpnet::testing::CsbmOptions o;
    o.nodes = 400;
    o.classes = 2;
    o.homophily = homophily;
    o.feature_signal = 0.3;
    o.num_splits = 3;
    const auto ds = gpnet::testing::csbm_dataset("csbm", o);
    SweepOptions opts;
    opts.splits = {0, 1, 2};
    const auto results = run_sweep(ds, expand_grid(spec, base_point()), opts);
    const double plus = best_val_for_beta(results, 1);
    const double minus = best_val_for_beta(results, -1);
    MESSAGE("homophily ", homophily, ": best val beta=+1 ", plus, ", beta=-1 ", minus);
    if (homophily > 0.5) {
      CHECK(plus > minus);
    } else {
      CHECK(minus > plus);
    }
  }
}
