#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "../support/synthetic.hpp"
#include "gpnet/error.hpp"
#include "gpnet/feature_cache.hpp"

using namespace gpnet;
namespace fs = std::filesystem;

TEST_CASE("feature cache round trip, lookup and corruption") {
  const auto dir = fs::temp_directory_path() / "gpnet_test_cache";
  fs::remove_all(dir);
  gpnet::testing::Rng rng(1);
  FilterConfig c;
  const PropagatedFeatures pf{gpnet::testing::random_dense(7, 3, rng),
                              config_fingerprint(c, "toy")};

  const auto path = feature_cache_path(dir, "toy", pf.fingerprint);
  CHECK(path.filename() == "toy-" + pf.fingerprint + ".hbar");
  CHECK_FALSE(load_cached_features(dir, "toy", pf.fingerprint));

  write_features(path, pf);
  CHECK(fs::file_size(path) == 16 + 8 + 8 + 32 + 7 * 3 * 8);
  {
    std::ifstream in(path, std::ios::binary);
    std::string magic(16, '\0');
    in.read(magic.data(), 16);
    CHECK(magic == kFeatureCacheMagic);
  }
  const auto back = read_features(path);
  CHECK(back.h_bar == pf.h_bar);
  CHECK(back.fingerprint == pf.fingerprint);

  const auto hit = load_cached_features(dir, "toy", pf.fingerprint);
  REQUIRE(hit);
  CHECK(hit->h_bar == pf.h_bar);
  FilterConfig other = c;
  other.k = 3;
  CHECK_FALSE(load_cached_features(dir, "toy", config_fingerprint(other, "toy")));

  fs::resize_file(path, fs::file_size(path) - 8);
  try {
    read_features(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCountMismatch);
  }
  std::ofstream(path, std::ios::binary) << "GPNET:CKPT:v001\n";
  try {
    read_features(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformed);
  }
  fs::remove_all(dir);
}
