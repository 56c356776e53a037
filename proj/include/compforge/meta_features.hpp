#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "compforge/matrix.hpp"

namespace compforge {

struct DatasetSeries {
  std::string dataset_id;
  Matrix values;  // N x C
  std::string note;
};

/// Raw series CSV: header `timestamp,ch0,...,ch{C-1}`, one row per step.
/// Throws SchemaError on a bad header, short row or non-finite value, and
/// TooShortError when fewer than two rows are present.
DatasetSeries read_series_csv(std::istream& in, const std::string& dataset_id);
DatasetSeries load_series(const std::filesystem::path& path, const std::string& dataset_id);

struct ProxyParams {
  std::size_t L = 96;
  std::size_t K = 10;
  std::size_t M = 2048;
  std::uint64_t seed = 0;
  // Take every (channel, t) once, channel-major, instead of M random draws.
  bool exhaustive = false;
};

struct ProxyRow {
  std::size_t channel = 0;
  std::size_t t = 0;  // 1-indexed end of the window
  std::vector<double> x;
  double v = 0.0;
  std::size_t label = 0;  // 1..K
};

struct ProxyTable {
  std::size_t L = 0;
  std::size_t K = 0;
  std::vector<double> boundaries;  // K - 1 quantile cut points
  std::vector<ProxyRow> rows;
  std::vector<std::string> warnings;
};

/// Sliding-window next-value classification task.
///
/// Row i takes channel c and end time t (1-indexed, L <= t <= N-1): the
/// window is values[t-L+1..t, c] and the target v is values[t+1, c]. In
/// sampled mode each row draws c = below(C) and then t = L + below(N-L) from
/// one generator seeded with `seed`. Cut points are the type-7 sample
/// quantiles of all targets at j/K for j = 1..K-1, and a target's label is
/// 1 plus the number of cut points not above it, so equal targets fall into
/// the top bin.
///
/// Throws TooShortError when N <= L, and std::invalid_argument for L < 1,
/// K < 2 or M < 1.
ProxyTable build_proxy(const DatasetSeries& series, const ProxyParams& params);

/// Header `channel,t,x0,...,x{L-1},v,label`.
void write_proxy_csv(std::ostream& out, const ProxyTable& table);

inline constexpr std::size_t kFallbackFeatureCount = 24;

/// Names of the fallback vector entries, in their frozen order.
const std::vector<std::string>& fallback_feature_names();

enum class FeatureSource { External, Fallback };

struct MetaFeatureVector {
  std::string dataset_id;
  std::vector<double> values;
  FeatureSource source = FeatureSource::External;
};

/// Statistical stand-in for encoder embeddings. Each channel is z-scored,
/// the per-channel statistics are averaged, and a channel with no spread
/// contributes zeros. Throws TooShortError for fewer than 8 rows.
MetaFeatureVector fallback_features(const DatasetSeries& series);

/// Embedding file: header `dataset_id,v0,...,v{d-1}`. Throws SchemaError on
/// malformed input or repeated ids and DimMismatchError when a row's width
/// differs from the header.
std::vector<MetaFeatureVector> read_embeddings(std::istream& in);
std::vector<MetaFeatureVector> load_embeddings(const std::filesystem::path& path);
/// Throws DimMismatchError when vector lengths differ.
void write_embeddings(std::ostream& out, const std::vector<MetaFeatureVector>& vectors);

}  // namespace compforge
