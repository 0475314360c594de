#include "gpnet/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "binary_io.hpp"
#include "gpnet/error.hpp"

namespace gpnet {

namespace {

using nlohmann::json;

constexpr std::array kKnownStats = {
    DatasetStats{"cora", 2708, 1433, 7, 5429, 0},
    DatasetStats{"citeseer", 3327, 3703, 6, 4732, 0},
    DatasetStats{"pubmed", 19717, 500, 3, 44338, 0},
    DatasetStats{"cornell", 183, 1703, 5, 295, 0},
    DatasetStats{"texas", 183, 1703, 5, 309, 0},
    DatasetStats{"wisconsin", 251, 1703, 5, 499, 0},
    DatasetStats{"chameleon", 2277, 2325, 5, 36101, 0},
    // Published as "198K".
    DatasetStats{"squirrel", 5201, 2089, 5, 198000, 500},
};

json read_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingFile, fmt::format("missing file {}", path.string()));
  }
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed, fmt::format("{}: {}", path.string(), e.what()));
  }
}

template <typename T>
T meta_field(const json& meta, const char* key, const std::filesystem::path& path) {
  if (!meta.contains(key)) {
    throw Error(ErrorCode::kMalformed, fmt::format("{}: missing key '{}'", path.string(), key));
  }
  try {
    return meta.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformed,
                fmt::format("{}: key '{}' has the wrong type: {}", path.string(), key, e.what()));
  }
}

std::vector<std::size_t> index_list(const json& obj, const char* key, std::size_t split) {
  if (!obj.contains(key) || !obj.at(key).is_array()) {
    throw Error(ErrorCode::kMalformed, fmt::format("splits.json[{}]: missing '{}' array", split, key));
  }
  std::vector<std::size_t> out;
  for (const auto& v : obj.at(key)) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw Error(ErrorCode::kMalformed,
                  fmt::format("splits.json[{}].{}: non-negative integers expected", split, key));
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

void GraphDataset::validate() const {
  if (features.rows() != num_nodes || features.cols() != num_features) {
    throw Error(ErrorCode::kCountMismatch,
                fmt::format("features are {}x{}, expected {}x{}", features.rows(), features.cols(),
                            num_nodes, num_features));
  }
  if (labels.size() != num_nodes) {
    throw Error(ErrorCode::kCountMismatch,
                fmt::format("{} labels for {} nodes", labels.size(), num_nodes));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  fmt::format("node {} has label {} but there are {} classes", i, labels[i],
                              num_classes));
    }
  }
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  fmt::format("edge ({}, {}) outside [0, {})", u, v, num_nodes));
    }
  }
  if (!features.all_finite()) throw Error(ErrorCode::kMalformed, "features contain non-finite values");
  for (std::size_t s = 0; s < splits.size(); ++s) {
    std::vector<char> owner(num_nodes, 0);
    const std::array<std::pair<const char*, const std::vector<std::size_t>*>, 3> parts = {
        {{"train", &splits[s].train}, {"val", &splits[s].val}, {"test", &splits[s].test}}};
    for (const auto& [name, idx] : parts) {
      for (std::size_t i : *idx) {
        if (i >= num_nodes) {
          throw Error(ErrorCode::kIndexOutOfRange,
                      fmt::format("split {} {}: node {} outside [0, {})", s, name, i, num_nodes));
        }
        if (owner[i]++) {
          throw Error(ErrorCode::kMalformed,
                      fmt::format("split {}: node {} appears twice across train/val/test", s, i));
        }
      }
    }
  }
}

GraphDataset load_bundle(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);
  GraphDataset ds;
  ds.name = meta_field<std::string>(meta, "name", meta_path);
  ds.num_nodes = meta_field<std::size_t>(meta, "num_nodes", meta_path);
  const auto num_edges = meta_field<std::size_t>(meta, "num_edges", meta_path);
  ds.num_features = meta_field<std::size_t>(meta, "num_features", meta_path);
  ds.num_classes = meta_field<std::size_t>(meta, "num_classes", meta_path);
  ds.features_row_normalized = meta_field<bool>(meta, "features_row_normalized", meta_path);

  const auto raw_edges = io::read_file_array<std::uint32_t>(dir / "edges.bin");
  if (raw_edges.size() != 2 * num_edges) {
    throw Error(ErrorCode::kCountMismatch,
                fmt::format("edges.bin holds {} ids, meta.json declares {} edges ({} ids)",
                            raw_edges.size(), num_edges, 2 * num_edges));
  }
  ds.edges.reserve(num_edges);
  for (std::size_t e = 0; e < num_edges; ++e) ds.edges.emplace_back(raw_edges[2 * e], raw_edges[2 * e + 1]);

  const auto raw_features = io::read_file_array<float>(dir / "features.bin");
  if (raw_features.size() != ds.num_nodes * ds.num_features) {
    throw Error(ErrorCode::kCountMismatch,
                fmt::format("features.bin holds {} values, expected {} x {}", raw_features.size(),
                            ds.num_nodes, ds.num_features));
  }
  ds.features = DenseMatrix(ds.num_nodes, ds.num_features,
                            std::vector<double>(raw_features.begin(), raw_features.end()));

  ds.labels = io::read_file_array<Label>(dir / "labels.bin");
  if (ds.labels.size() != ds.num_nodes) {
    throw Error(ErrorCode::kCountMismatch,
                fmt::format("labels.bin holds {} labels for {} nodes", ds.labels.size(),
                            ds.num_nodes));
  }

  const auto splits_path = dir / "splits.json";
  const json splits = read_json(splits_path);
  if (!splits.is_array()) {
    throw Error(ErrorCode::kMalformed, fmt::format("{}: top level must be an array", splits_path.string()));
  }
  for (std::size_t s = 0; s < splits.size(); ++s) {
    ds.splits.push_back({index_list(splits[s], "train", s), index_list(splits[s], "val", s),
                         index_list(splits[s], "test", s)});
  }
  ds.validate();
  return ds;
}

void save_bundle(const GraphDataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  std::filesystem::create_directories(dir);
  const json meta = {{"name", dataset.name},
                     {"num_nodes", dataset.num_nodes},
                     {"num_edges", dataset.num_edges()},
                     {"num_features", dataset.num_features},
                     {"num_classes", dataset.num_classes},
                     {"features_row_normalized", dataset.features_row_normalized}};
  {
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "cannot write meta.json");
  }
  {
    std::vector<std::uint32_t> ids;
    ids.reserve(2 * dataset.edges.size());
    for (auto [u, v] : dataset.edges) {
      ids.push_back(u);
      ids.push_back(v);
    }
    auto out = io::open_out(dir / "edges.bin");
    io::write_array<std::uint32_t>(out, ids);
  }
  {
    auto values = dataset.features.values();
    std::vector<float> narrow(values.begin(), values.end());
    auto out = io::open_out(dir / "features.bin");
    io::write_array<float>(out, narrow);
  }
  {
    auto out = io::open_out(dir / "labels.bin");
    io::write_array<Label>(out, dataset.labels);
  }
  {
    json splits = json::array();
    for (const auto& s : dataset.splits) {
      splits.push_back({{"train", s.train}, {"val", s.val}, {"test", s.test}});
    }
    std::ofstream out(dir / "splits.json");
    out << splits.dump() << '\n';
    if (!out) throw Error(ErrorCode::kIo, "cannot write splits.json");
  }
}

SplitMasks select_split(const GraphDataset& dataset, std::size_t split_index) {
  if (split_index >= dataset.splits.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("split {} requested but {} has {} split(s)", split_index, dataset.name,
                            dataset.splits.size()));
  }
  const auto& split = dataset.splits[split_index];
  SplitMasks masks{std::vector<bool>(dataset.num_nodes), std::vector<bool>(dataset.num_nodes),
                   std::vector<bool>(dataset.num_nodes)};
  for (std::size_t i : split.train) masks.train[i] = true;
  for (std::size_t i : split.val) masks.val[i] = true;
  for (std::size_t i : split.test) masks.test[i] = true;
  return masks;
}

std::optional<DatasetStats> known_stats(std::string_view name) {
  const std::string key = lowercase(name);
  for (const auto& stats : kKnownStats) {
    if (stats.name == key) return stats;
  }
  return std::nullopt;
}

std::vector<std::string> check_known_stats(const GraphDataset& dataset) {
  std::vector<std::string> problems;
  const auto stats = known_stats(dataset.name);
  if (!stats) return problems;
  auto check = [&](const char* what, std::size_t got, std::size_t want, std::size_t tol) {
    const std::size_t diff = got > want ? got - want : want - got;
    if (diff > tol) {
      problems.push_back(fmt::format("{}: {} = {}, published {}", dataset.name, what, got, want));
    }
  };
  check("nodes", dataset.num_nodes, stats->nodes, 0);
  check("features", dataset.num_features, stats->features, 0);
  check("classes", dataset.num_classes, stats->classes, 0);
  check("edges", dataset.num_edges(), stats->edges, stats->edge_tolerance);
  return problems;
}

void row_normalize(DenseMatrix& features) {
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    double total = 0.0;
    for (double v : row) total += std::abs(v);
    if (total == 0.0) continue;
    for (double& v : row) v /= total;
  }
}

}  // namespace gpnet
