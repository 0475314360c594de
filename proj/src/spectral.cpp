#include "gpnet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "gpnet/error.hpp"
#include "gpnet/geometric_filter.hpp"

namespace gpnet {

std::string_view to_string(FilterClass c) noexcept {
  switch (c) {
    case FilterClass::kLowPass: return "low-pass";
    case FilterClass::kHighPass: return "high-pass";
    case FilterClass::kAllPass: return "all-pass";
    case FilterClass::kMixed: return "mixed";
  }
  return "mixed";
}

FilterResponses filter_response(const FilterConfig& config, std::span<const double> lambdas) {
  config.validate();
  FilterResponses out;
  for (int c = 0; c < config.m; ++c) {
    const auto set = exponent_set(config, static_cast<std::size_t>(c));
    std::vector<double> curve(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      const double x = 1.0 - lambdas[i];
      double poly = 0.0;
      for (int p : set.exponents) poly += std::pow(x, p);
      curve[i] = config.alpha + config.beta * poly;
    }
    out.channels.push_back(std::move(curve));
  }
  if (config.aggregation == Aggregation::kSum || config.aggregation == Aggregation::kAvg) {
    std::vector<double> agg(lambdas.size(), 0.0);
    for (const auto& curve : out.channels)
      for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += curve[i];
    if (config.aggregation == Aggregation::kAvg) {
      for (double& v : agg) v /= static_cast<double>(config.m);
    }
    out.aggregated = std::move(agg);
  }
  return out;
}

FilterClass classify_filter(std::span<const double> lambdas, std::span<const double> responses) {
  if (lambdas.size() != responses.size() || lambdas.empty()) {
    throw Error(ErrorCode::kInput, fmt::format("classify_filter: {} lambdas vs {} responses",
                                               lambdas.size(), responses.size()));
  }
  const auto [lo, hi] = std::minmax_element(responses.begin(), responses.end());
  if (*hi - *lo < 1e-9) return FilterClass::kAllPass;

  double low_sum = 0.0;
  double high_sum = 0.0;
  std::size_t low_count = 0;
  std::size_t high_count = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] >= 0.0 && lambdas[i] < 1.0) {
      low_sum += std::abs(responses[i]);
      ++low_count;
    } else if (lambdas[i] > 1.0 && lambdas[i] <= 2.0) {
      high_sum += std::abs(responses[i]);
      ++high_count;
    }
  }
  if (low_count == 0 || high_count == 0) return FilterClass::kMixed;
  const double low = low_sum / static_cast<double>(low_count);
  const double high = high_sum / static_cast<double>(high_count);
  if (low > 2.0 * high) return FilterClass::kLowPass;
  if (high > 2.0 * low) return FilterClass::kHighPass;
  return FilterClass::kMixed;
}

std::vector<double> lambda_grid(double upper, double step) {
  if (!(step > 0.0) || upper < 0.0) {
    throw Error(ErrorCode::kInput, fmt::format("lambda_grid: upper {} step {}", upper, step));
  }
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor(upper / step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(static_cast<double>(i) * step);
  if (grid.back() < upper - 1e-12) grid.push_back(upper);
  return grid;
}

DenseMatrix stationary_limit(const SparseMatrix& adj, DisconnectedPolicy policy) {
  const std::size_t n = adj.n();
  for (std::size_t i = 0; i < n; ++i) {
    if (adj.at(i, i) == 0.0) {
      throw Error(ErrorCode::kInput,
                  fmt::format("stationary_limit needs self-loops; node {} has none", i));
    }
  }
  const auto deg = degrees_of(adj).degrees;
  const auto comp = connected_components(adj);
  const std::size_t num_comp = n == 0 ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  if (num_comp > 1 && policy == DisconnectedPolicy::kError) {
    throw Error(ErrorCode::kInput,
                fmt::format("graph has {} connected components; the limit is per component",
                            num_comp));
  }
  // Volume 2e + n of each component (self-loops counted once).
  std::vector<double> volume(num_comp, 0.0);
  for (std::size_t i = 0; i < n; ++i) volume[comp[i]] += deg[i];

  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (comp[i] == comp[j]) out(i, j) = std::sqrt(deg[i] * deg[j]) / volume[comp[i]];
    }
  }
  return out;
}

SpectrumReport spectrum_report(const FilterConfig& config, const SparseMatrix& s,
                               std::size_t cap) {
  config.validate();
  if (s.n() > cap) {
    throw Error(ErrorCode::kResource,
                fmt::format("spectrum needs a dense eigendecomposition; n = {} exceeds the cap {}",
                            s.n(), cap));
  }
  DenseMatrix laplacian = DenseMatrix::identity(s.n()) - s.to_dense();
  auto eig = dense_eigh_sym(laplacian, cap);

  SpectrumReport report;
  report.aggregation = config.aggregation;
  report.per_channel_only =
      config.aggregation == Aggregation::kMax || config.aggregation == Aggregation::kMin;
  for (double l : eig.eigenvalues) {
    if (l < -1e-8 || l > 2.0 + 1e-8) {
      throw Error(ErrorCode::kNumeric, fmt::format("eigenvalue {} outside [0, 2]", l));
    }
  }
  report.eigenvalues = std::move(eig.eigenvalues);
  report.responses = filter_response(config, report.eigenvalues);

  const double upper = report.eigenvalues.empty() ? 0.0 : std::max(0.0, report.eigenvalues.back());
  const auto grid = lambda_grid(std::min(2.0, upper));
  const auto on_grid = filter_response(config, grid);
  for (const auto& curve : on_grid.channels) {
    report.channel_classes.push_back(classify_filter(grid, curve));
  }
  if (on_grid.aggregated) {
    report.filter_class = classify_filter(grid, *on_grid.aggregated);
  } else {
    const auto& classes = report.channel_classes;
    const bool same = std::all_of(classes.begin(), classes.end(),
                                  [&](FilterClass c) { return c == classes.front(); });
    report.filter_class = same ? classes.front() : FilterClass::kMixed;
  }
  return report;
}

void emit_spectrum_csv(const SpectrumReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  out << "lambda,channel,response\n";
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
    const double l = report.eigenvalues[i];
    for (std::size_t c = 0; c < report.responses.channels.size(); ++c) {
      out << fmt::format("{:.17g},{},{:.17g}\n", l, c + 1, report.responses.channels[c][i]);
    }
    if (report.responses.aggregated) {
      out << fmt::format("{:.17g},{},{:.17g}\n", l, to_string(report.aggregation),
                         (*report.responses.aggregated)[i]);
    }
  }
  if (!out) throw Error(ErrorCode::kIo, fmt::format("write to {} failed", path.string()));
}

}  // namespace gpnet
