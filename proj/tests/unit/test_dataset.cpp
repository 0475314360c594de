#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "../support/synthetic.hpp"
#include "gpnet/dataset.hpp"
#include "gpnet/error.hpp"

using namespace gpnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void check_same(const GraphDataset& a, const GraphDataset& b) {
  CHECK(a.name == b.name);
  CHECK(a.num_nodes == b.num_nodes);
  CHECK(a.num_features == b.num_features);
  CHECK(a.num_classes == b.num_classes);
  CHECK(a.features_row_normalized == b.features_row_normalized);
  CHECK(a.edges == b.edges);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  REQUIRE(a.splits.size() == b.splits.size());
  for (std::size_t s = 0; s < a.splits.size(); ++s) {
    CHECK(a.splits[s].train == b.splits[s].train);
    CHECK(a.splits[s].val == b.splits[s].val);
    CHECK(a.splits[s].test == b.splits[s].test);
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ErrorCode load_error(const fs::path& dir) {
  try {
    load_bundle(dir);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kUsage;
}

void edit_meta(const fs::path& dir, const std::string& key, const nlohmann::json& value) {
  auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
  meta[key] = value;
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

}  // namespace

TEST_CASE("toy bundle round trip") {
  TempDir tmp("gpnet_test_toy_bundle");
  const auto toy = gpnet::testing::toy_dataset();
  save_bundle(toy, tmp.path);
  for (const char* f : {"meta.json", "edges.bin", "features.bin", "labels.bin", "splits.json"})
    CHECK(fs::exists(tmp.path / f));
  CHECK(fs::file_size(tmp.path / "edges.bin") == 2 * 2 * 4);
  CHECK(fs::file_size(tmp.path / "features.bin") == 3 * 2 * 4);
  CHECK(fs::file_size(tmp.path / "labels.bin") == 3 * 2);
  check_same(load_bundle(tmp.path), toy);

  const auto meta = nlohmann::json::parse(slurp(tmp.path / "meta.json"));
  CHECK(meta["num_edges"] == 2);
  CHECK(meta["features_row_normalized"] == false);
}

TEST_CASE("random bundles round trip and re-save byte for byte") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    gpnet::testing::CsbmOptions o;
    o.nodes = 40 + 10 * seed;
    o.num_splits = seed;
    o.seed = seed;
    const auto ds = gpnet::testing::csbm_dataset("csbm", o);
    TempDir a("gpnet_test_bundle_a");
    TempDir b("gpnet_test_bundle_b");
    save_bundle(ds, a.path);
    const auto back = load_bundle(a.path);
    check_same(back, ds);
    save_bundle(back, b.path);
    for (const char* f : {"meta.json", "edges.bin", "features.bin", "labels.bin", "splits.json"})
      CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
}

TEST_CASE("single node bundle without edges is valid") {
  TempDir tmp("gpnet_test_single");
  GraphDataset ds;
  ds.name = "one";
  ds.num_nodes = 1;
  ds.num_features = 1;
  ds.num_classes = 1;
  ds.features = DenseMatrix(1, 1, {2.5});
  ds.labels = {0};
  ds.splits = {SplitRows{{0}, {}, {}}};
  save_bundle(ds, tmp.path);
  CHECK(fs::file_size(tmp.path / "edges.bin") == 0);
  check_same(load_bundle(tmp.path), ds);
}

TEST_CASE("load errors carry distinct codes") {
  TempDir tmp("gpnet_test_bad_bundle");
  const auto toy = gpnet::testing::toy_dataset();

  CHECK(load_error(tmp.path / "nowhere") == ErrorCode::kMissingFile);

  save_bundle(toy, tmp.path);
  fs::remove(tmp.path / "labels.bin");
  CHECK(load_error(tmp.path) == ErrorCode::kMissingFile);

  save_bundle(toy, tmp.path);
  edit_meta(tmp.path, "num_edges", 3);
  CHECK(load_error(tmp.path) == ErrorCode::kCountMismatch);

  save_bundle(toy, tmp.path);
  edit_meta(tmp.path, "num_features", 3);
  CHECK(load_error(tmp.path) == ErrorCode::kCountMismatch);

  save_bundle(toy, tmp.path);
  fs::resize_file(tmp.path / "labels.bin", 4);
  CHECK(load_error(tmp.path) == ErrorCode::kCountMismatch);

  save_bundle(toy, tmp.path);
  edit_meta(tmp.path, "num_classes", 1);
  CHECK(load_error(tmp.path) == ErrorCode::kIndexOutOfRange);

  save_bundle(toy, tmp.path);
  {
    std::ofstream out(tmp.path / "edges.bin", std::ios::binary | std::ios::app);
    const std::uint32_t bad[2] = {0, 7};
    out.write(reinterpret_cast<const char*>(bad), sizeof bad);
  }
  edit_meta(tmp.path, "num_edges", 3);
  CHECK(load_error(tmp.path) == ErrorCode::kIndexOutOfRange);

  save_bundle(toy, tmp.path);
  std::ofstream(tmp.path / "splits.json") << R"([{"train":[0],"val":[1],"test":[9]}])";
  CHECK(load_error(tmp.path) == ErrorCode::kIndexOutOfRange);

  save_bundle(toy, tmp.path);
  std::ofstream(tmp.path / "splits.json") << R"([{"train":[0],"val":[0],"test":[2]}])";
  CHECK(load_error(tmp.path) == ErrorCode::kMalformed);

  save_bundle(toy, tmp.path);
  std::ofstream(tmp.path / "meta.json") << "{ not json";
  CHECK(load_error(tmp.path) == ErrorCode::kMalformed);

  save_bundle(toy, tmp.path);
  fs::resize_file(tmp.path / "edges.bin", 7);
  CHECK(load_error(tmp.path) == ErrorCode::kMalformed);
}

TEST_CASE("select_split") {
  const auto toy = gpnet::testing::toy_dataset();
  const auto masks = select_split(toy, 0);
  CHECK(masks.train == std::vector<bool>{true, false, false});
  CHECK(masks.val == std::vector<bool>{false, true, false});
  CHECK(masks.test == std::vector<bool>{false, false, true});
  try {
    select_split(toy, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIndexOutOfRange);
  }

  gpnet::testing::CsbmOptions o;
  o.num_splits = 10;
  const auto ds = gpnet::testing::csbm_dataset("ten", o);
  CHECK(ds.splits.size() == 10);
  for (std::size_t s = 0; s < 10; ++s) {
    const auto m = select_split(ds, s);
    std::size_t tr = 0, va = 0, te = 0;
    for (std::size_t i = 0; i < ds.num_nodes; ++i) {
      tr += m.train[i];
      va += m.val[i];
      te += m.test[i];
      CHECK(m.train[i] + m.val[i] + m.test[i] <= 1);
    }
    CHECK(tr == ds.splits[s].train.size());
    CHECK(va == ds.splits[s].val.size());
    CHECK(te == ds.splits[s].test.size());
  }
}

TEST_CASE("edge direction on disk does not change the adjacency") {
  gpnet::testing::Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    gpnet::testing::CsbmOptions o;
    o.seed = 50 + static_cast<std::uint64_t>(trial);
    auto ds = gpnet::testing::csbm_dataset("dir", o);
    auto flipped = ds;
    std::bernoulli_distribution coin(0.5);
    for (auto& [u, v] : flipped.edges)
      if (coin(rng)) std::swap(u, v);
    TempDir a("gpnet_test_dir_a");
    TempDir b("gpnet_test_dir_b");
    save_bundle(ds, a.path);
    save_bundle(flipped, b.path);
    const auto la = load_bundle(a.path);
    const auto lb = load_bundle(b.path);
    for (bool loops : {true, false})
      CHECK(build_adjacency(la.edges, la.num_nodes, loops) ==
            build_adjacency(lb.edges, lb.num_nodes, loops));
  }
}

TEST_CASE("published statistics") {
  const auto cora = known_stats("Cora");
  REQUIRE(cora);
  CHECK(cora->nodes == 2708);
  CHECK(cora->features == 1433);
  CHECK(cora->classes == 7);
  CHECK(cora->edges == 5429);
  const auto texas = known_stats("texas");
  REQUIRE(texas);
  CHECK(texas->nodes == 183);
  CHECK(texas->features == 1703);
  CHECK(texas->edges == 309);
  CHECK(known_stats("chameleon")->edges == 36101);
  CHECK_FALSE(known_stats("reddit"));

  const auto shaped = gpnet::testing::shaped_like(*texas, 1);
  auto named = shaped;
  named.name = "texas";
  CHECK(check_known_stats(named).empty());
  named.num_classes = 4;
  CHECK(check_known_stats(named).size() == 1);
  CHECK(check_known_stats(gpnet::testing::toy_dataset()).empty());
}

TEST_CASE("row_normalize") {
  DenseMatrix f(3, 2, {1, 3, 0, 0, -2, 2});
  row_normalize(f);
  CHECK(f == DenseMatrix(3, 2, {0.25, 0.75, 0, 0, -0.5, 0.5}));
}
