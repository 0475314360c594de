#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "../support/synthetic.hpp"
#include "gpnet/cli.hpp"
#include "gpnet/dataset.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result gpnet_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = gpnet::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "gpnet_test_cli";
  fs::path bundle = root / "csbm";
  Workspace() {
    fs::remove_all(root);
    unsetenv("GPNET_CACHE_DIR");
    gpnet::testing::CsbmOptions o;
    o.nodes = 120;
    o.num_splits = 2;
    gpnet::save_bundle(gpnet::testing::csbm_dataset("csbm", o), bundle);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
  Workspace ws;
  CHECK(gpnet_cli({}).code == 1);
  CHECK(gpnet_cli({"frobnicate"}).code == 1);
  CHECK(gpnet_cli({"train"}).code == 1);
  CHECK(gpnet_cli({"train", "--dataset", ws.bundle.string(), "--agg", "median"}).code == 1);
  CHECK(gpnet_cli({"train", "--dataset", ws.bundle.string(), "--self-loops", "maybe"}).code == 1);
  CHECK(gpnet_cli({"train", "--dataset", ws.bundle.string(), "--beta", "2"}).code == 1);
  CHECK(gpnet_cli({"train", "--dataset", ws.bundle.string(), "--q", "2,x"}).code == 1);
  CHECK(gpnet_cli({"train", "--dataset", ws.bundle.string(), "--lr", "0"}).code == 1);

  const auto r = gpnet_cli({"precompute", "--dataset", ws.bundle.string(), "--cache-dir",
                            ws.path("cache"), "--q", "0"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "q_m >= 1"));

  const auto help = gpnet_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(contains(help.out, "precompute"));
}

TEST_CASE("data errors exit 2") {
  Workspace ws;
  CHECK(gpnet_cli({"train", "--dataset", ws.path("absent")}).code == 2);
  CHECK(gpnet_cli({"train", "--dataset", ws.bundle.string(), "--split", "9"}).code == 2);
  fs::remove(ws.bundle / "features.bin");
  CHECK(gpnet_cli({"validate-bundle", "--dataset", ws.bundle.string()}).code == 2);
}

TEST_CASE("max aggregation above the memory budget exits 4 with guidance") {
  Workspace ws;
  const auto r = gpnet_cli({"precompute", "--dataset", ws.bundle.string(), "--cache-dir",
                            ws.path("cache"), "--agg", "max", "--memory-cap-mb", "0.1"});
  CHECK(r.code == 4);
  CHECK(contains(r.err, "cap"));
}

TEST_CASE("precompute caches and reuses H_bar") {
  Workspace ws;
  const std::vector<std::string> args{"precompute", "--dataset", ws.bundle.string(), "--cache-dir",
                                      ws.path("cache"), "--m", "2", "--k", "3", "--q", "4,5",
                                      "--d", "0,3"};
  const auto first = gpnet_cli(args);
  REQUIRE(first.code == 0);
  CHECK(contains(first.out, "propagation wall time"));
  CHECK(contains(first.out, "rows 120"));
  const auto files = std::distance(fs::directory_iterator(ws.path("cache")), fs::directory_iterator());
  CHECK(files == 1);
  const auto second = gpnet_cli(args);
  CHECK(second.code == 0);
  CHECK(contains(second.out, "cache hit"));

  setenv("GPNET_CACHE_DIR", ws.path("env_cache").c_str(), 1);
  CHECK(gpnet_cli(args).code == 0);
  unsetenv("GPNET_CACHE_DIR");
  CHECK(fs::exists(ws.path("env_cache")));
}

TEST_CASE("train writes versioned metrics and is reproducible") {
  Workspace ws;
  auto run = [&](const std::string& out) {
    return gpnet_cli({"train", "--dataset", ws.bundle.string(), "--split", "all", "--epochs", "30",
                      "--runs", "2", "--lr", "0.05", "--out", ws.path(out)});
  };
  const auto a = run("a.json");
  REQUIRE(a.code == 0);
  CHECK(contains(a.out, "test"));
  const auto b = run("b.json");
  REQUIRE(b.code == 0);
  const auto ja = json::parse(slurp(ws.path("a.json")));
  const auto jb = json::parse(slurp(ws.path("b.json")));
  CHECK(ja["schema_version"] == 1);
  CHECK(ja["metrics"]["runs"].size() == 4);
  CHECK(ja["splits"] == json::array({0, 1}));
  CHECK(ja["metrics"]["test_mean"] == jb["metrics"]["test_mean"]);
  CHECK(ja["metrics"]["val_mean"] == jb["metrics"]["val_mean"]);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ja["metrics"]["runs"][i]["selected_epoch"] == jb["metrics"]["runs"][i]["selected_epoch"]);
  }

  const auto c = gpnet_cli({"train", "--dataset", ws.bundle.string(), "--epochs", "5", "--runs",
                            "1", "--checkpoint", ws.path("w.ckpt")});
  CHECK(c.code == 0);
  CHECK(fs::exists(ws.path("w.ckpt")));
}

TEST_CASE("sweep evaluates a deduplicated grid and respects the size cap") {
  Workspace ws;
  std::ofstream(ws.path("grid.json")) << R"({"m":[1],"k":[1,2,2],"q1":[2],"d1":[0],"agg":["sum"],
      "lr":[0.05],"dropout":[0],"weight_decay":[5e-4],"epochs":[20]})";
  const auto r = gpnet_cli({"sweep", "--dataset", ws.bundle.string(), "--grid", ws.path("grid.json"),
                            "--runs", "1", "--out", ws.path("sweep.csv")});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(ws.path("sweep.csv")));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  CHECK(lines.size() == 3);
  CHECK(contains(lines[0], "val_mean"));
  CHECK(fs::exists(ws.path("sweep.best.json")));
  CHECK(json::parse(slurp(ws.path("sweep.best.json")))["schema_version"] == 1);

  const auto big = gpnet_cli({"sweep", "--dataset", ws.bundle.string()});
  CHECK(big.code == 1);
  CHECK(contains(big.err, "--allow-large"));
}

TEST_CASE("spectrum writes the response CSV") {
  Workspace ws;
  const auto r = gpnet_cli({"spectrum", "--dataset", ws.bundle.string(), "--k", "1", "--q0", "1",
                            "--d", "1", "--alpha", "0", "--out", ws.path("spec.csv")});
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "filter class: low-pass"));
  const auto text = slurp(ws.path("spec.csv"));
  CHECK(text.rfind("lambda,channel,response\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 120);
}

TEST_CASE("bench prints a row per model") {
  Workspace ws;
  const auto r = gpnet_cli({"bench", "--dataset", ws.bundle.string(), "--epochs", "100",
                            "--out", ws.path("bench.json")});
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "gpnet"));
  CHECK(contains(r.out, "sgc-reduction"));
  CHECK(contains(r.out, "mlp-reduction"));
  const auto doc = json::parse(slurp(ws.path("bench.json")));
  CHECK(doc["models"]["sgc-reduction"]["ratio_to_sgc"] == 1.0);
  CHECK(gpnet_cli({"bench", "--dataset", ws.bundle.string(), "--epochs", "50"}).code == 1);
}

TEST_CASE("validate-bundle checks published statistics") {
  Workspace ws;
  const auto ok = gpnet_cli({"validate-bundle", "--dataset", ws.bundle.string()});
  CHECK(ok.code == 0);
  CHECK(contains(ok.err, "no published statistics"));

  auto fake = gpnet::testing::toy_dataset();
  fake.name = "texas";
  gpnet::save_bundle(fake, ws.root / "texas");
  const auto bad = gpnet_cli({"validate-bundle", "--dataset", (ws.root / "texas").string()});
  CHECK(bad.code == 2);
  CHECK(contains(bad.err, "mismatch"));

  setenv("GPNET_DATA_DIR", ws.root.c_str(), 1);
  CHECK(gpnet_cli({"validate-bundle", "--dataset", "csbm"}).code == 0);
  unsetenv("GPNET_DATA_DIR");
}
