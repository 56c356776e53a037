#include "compforge/meta_features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "compforge/csv.hpp"
#include "compforge/errors.hpp"
#include "compforge/rng.hpp"
#include "compforge/stats.hpp"

namespace compforge {

DatasetSeries read_series_csv(std::istream& in, const std::string& dataset_id) {
  std::string line;
  if (!csv::next_record(in, line)) throw SchemaError("series file is empty");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "timestamp") {
    throw SchemaError("series header must be timestamp,ch0,...");
  }
  const std::size_t C = header.size() - 1;
  for (std::size_t c = 0; c < C; ++c) {
    if (header[c + 1] != "ch" + std::to_string(c)) {
      throw SchemaError("series column " + std::to_string(c + 1) + " must be named ch" + std::to_string(c));
    }
  }
  std::vector<double> flat;
  std::size_t n = 0;
  while (csv::next_record(in, line)) {
    const auto cells = csv::split(line);
    if (cells.size() != C + 1) throw SchemaError("series row " + std::to_string(n + 1) + " has the wrong width");
    for (std::size_t c = 0; c < C; ++c) {
      const auto v = csv::parse_double(cells[c + 1]);
      if (!v || !std::isfinite(*v)) {
        throw SchemaError("series row " + std::to_string(n + 1) + ": non-finite or unparsable value");
      }
      flat.push_back(*v);
    }
    ++n;
  }
  if (n < 2) throw TooShortError("series needs at least two rows");
  DatasetSeries s;
  s.dataset_id = dataset_id;
  s.values = Matrix(n, C);
  s.values.data = std::move(flat);
  return s;
}

DatasetSeries load_series(const std::filesystem::path& path, const std::string& dataset_id) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open series file " + path.string());
  return read_series_csv(in, dataset_id);
}

namespace {

// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ProxyTable build_proxy(const DatasetSeries& series, const ProxyParams& params) {
  if (params.L < 1) throw std::invalid_argument("window length L must be at least 1");
  if (params.K < 2) throw std::invalid_argument("bin count K must be at least 2");
  if (params.M < 1 && !params.exhaustive) throw std::invalid_argument("sample count M must be at least 1");
  const std::size_t N = series.values.rows;
  const std::size_t C = series.values.cols;
  if (C == 0) throw ShapeError("series has no channels");
  if (N <= params.L) {
    throw TooShortError("series length " + std::to_string(N) + " leaves no window of length " +
                        std::to_string(params.L));
  }

  ProxyTable table;
  table.L = params.L;
  table.K = params.K;
  auto make_row = [&](std::size_t c, std::size_t t) {
    ProxyRow r;
    r.channel = c;
    r.t = t;
    r.x.reserve(params.L);
    for (std::size_t s = t - params.L; s < t; ++s) r.x.push_back(series.values(s, c));
    r.v = series.values(t, c);
    return r;
  };
  if (params.exhaustive) {
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = params.L; t <= N - 1; ++t) table.rows.push_back(make_row(c, t));
  } else {
    Xoshiro256 rng(params.seed);
    table.rows.reserve(params.M);
    for (std::size_t i = 0; i < params.M; ++i) {
      const auto c = static_cast<std::size_t>(rng.below(C));
      const auto t = params.L + static_cast<std::size_t>(rng.below(N - params.L));
      table.rows.push_back(make_row(c, t));
    }
  }

  std::vector<double> targets;
  targets.reserve(table.rows.size());
  for (const auto& r : table.rows) targets.push_back(r.v);
  std::sort(targets.begin(), targets.end());
  if (targets.front() == targets.back()) {
    table.warnings.push_back("all proxy targets are equal; every label is " + std::to_string(params.K));
  }
  for (std::size_t j = 1; j < params.K; ++j) {
    table.boundaries.push_back(quantile_sorted(targets, static_cast<double>(j) / static_cast<double>(params.K)));
  }
  for (auto& r : table.rows) {
    const auto below = std::upper_bound(table.boundaries.begin(), table.boundaries.end(), r.v);
    r.label = 1 + static_cast<std::size_t>(below - table.boundaries.begin());
  }
  return table;
}

void write_proxy_csv(std::ostream& out, const ProxyTable& table) {
  out << "channel,t";
  for (std::size_t i = 0; i < table.L; ++i) out << ",x" << i;
  out << ",v,label\n";
  for (const auto& r : table.rows) {
    out << r.channel << ',' << r.t;
    for (double x : r.x) out << ',' << csv::format_double(x);
    out << ',' << csv::format_double(r.v) << ',' << r.label << '\n';
  }
}

const std::vector<std::string>& fallback_feature_names() {
  static const std::vector<std::string> names = {
      "mean",        "sd",           "skewness",     "excess_kurtosis", "acf1",         "acf7",
      "acf24",       "diff_sd",      "trend_rise",   "spectral_entropy", "acf2",        "acf12",
      "acf48",       "diff_acf1",    "diff2_sd",     "frac_positive",   "crossing_rate", "max",
      "min",         "median",       "iqr",          "trend_r2",        "half_shift",   "mean_abs_cross_corr"};
  return names;
}

namespace {

double acf(const std::vector<double>& z, std::size_t lag) {
  if (lag >= z.size()) return 0.0;
  const double mu = stats::mean(z);
  double den = 0.0;
  for (double v : z) den += (v - mu) * (v - mu);
  // Unit-variance input: a mean square this small is rounding noise.
  if (!(den / static_cast<double>(z.size()) > 1e-20)) return 0.0;
  double num = 0.0;
  for (std::size_t t = 0; t + lag < z.size(); ++t) num += (z[t] - mu) * (z[t + lag] - mu);
  return num / den;
}

std::vector<double> diff(const std::vector<double>& x) {
  std::vector<double> d;
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

double spectral_entropy(const std::vector<double>& z) {
  const std::size_t n = std::min<std::size_t>(z.size(), 512);
  const std::size_t start = z.size() - n;
  const std::size_t bins = n / 2;
  if (bins < 2) return 0.0;
  std::vector<double> power(bins);
  double total = 0.0;
  for (std::size_t f = 1; f <= bins; ++f) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(f * t % n) / static_cast<double>(n);
      re += z[start + t] * std::cos(angle);
      im -= z[start + t] * std::sin(angle);
    }
    power[f - 1] = re * re + im * im;
    total += power[f - 1];
  }
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double p : power) {
    const double q = p / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h / std::log(static_cast<double>(bins));
}

std::array<double, kFallbackFeatureCount> channel_features(const std::vector<double>& raw) {
  std::array<double, kFallbackFeatureCount> f{};
  const std::size_t n = raw.size();
  const double mu_raw = stats::mean(raw);
  double m2_raw = 0.0;
  for (double v : raw) m2_raw += (v - mu_raw) * (v - mu_raw);
  const double sd_raw = std::sqrt(m2_raw / static_cast<double>(n));
  if (!(sd_raw > 0.0)) return f;

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (raw[i] - mu_raw) / sd_raw;
  const double N = static_cast<double>(n);

  const double mu = stats::mean(z);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : z) {
    const double d = v - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= N;
  m3 /= N;
  m4 /= N;
  f[0] = mu;
  f[1] = std::sqrt(m2);
  f[2] = m3 / std::pow(m2, 1.5);
  f[3] = m4 / (m2 * m2) - 3.0;
  f[4] = acf(z, 1);
  f[5] = acf(z, 7);
  f[6] = acf(z, 24);
  const auto d1 = diff(z);
  f[7] = stats::sample_sd(d1);

  // Least squares of z on the index 0..n-1.
  const double tbar = (N - 1.0) / 2.0;
  double stt = 0.0, stz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tbar;
    stt += dt * dt;
    stz += dt * (z[i] - mu);
  }
  const double slope = stz / stt;
  f[8] = slope * (N - 1.0);
  f[9] = spectral_entropy(z);
  f[10] = acf(z, 2);
  f[11] = acf(z, 12);
  f[12] = acf(z, 48);
  f[13] = acf(d1, 1);
  f[14] = stats::sample_sd(diff(d1));

  std::size_t positive = 0, crossings = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (z[i] > 0.0) ++positive;
    if (i > 0 && ((z[i] > 0.0) != (z[i - 1] > 0.0))) ++crossings;
  }
  f[15] = static_cast<double>(positive) / N;
  f[16] = static_cast<double>(crossings) / (N - 1.0);

  auto sorted = z;
  std::sort(sorted.begin(), sorted.end());
  f[17] = sorted.back();
  f[18] = sorted.front();
  f[19] = quantile_sorted(sorted, 0.5);
  f[20] = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  f[21] = (slope * slope * stt) / (m2 * N);

  const std::size_t half = n / 2;
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < half; ++i) first += z[i];
  for (std::size_t i = n - half; i < n; ++i) second += z[i];
  f[22] = (second - first) / static_cast<double>(half);
  return f;
}

}  // namespace

MetaFeatureVector fallback_features(const DatasetSeries& series) {
  const std::size_t N = series.values.rows;
  const std::size_t C = series.values.cols;
  if (N < 8) throw TooShortError("fallback features need at least 8 rows");
  if (C == 0) throw ShapeError("series has no channels");

  std::vector<std::vector<double>> channels(C, std::vector<double>(N));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t c = 0; c < C; ++c) channels[c][i] = series.values(i, c);

  MetaFeatureVector out;
  out.dataset_id = series.dataset_id;
  out.source = FeatureSource::Fallback;
  out.values.assign(kFallbackFeatureCount, 0.0);
  for (const auto& ch : channels) {
    const auto f = channel_features(ch);
    for (std::size_t j = 0; j < kFallbackFeatureCount; ++j) out.values[j] += f[j];
  }
  for (auto& v : out.values) v /= static_cast<double>(C);

  if (C > 1) {
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < C; ++a) {
      for (std::size_t b = a + 1; b < C; ++b) {
        total += std::fabs(stats::pearson(channels[a], channels[b]));
        ++pairs;
      }
    }
    out.values[23] = total / static_cast<double>(pairs);
  }
  return out;
}

std::vector<MetaFeatureVector> read_embeddings(std::istream& in) {
  std::string line;
  if (!csv::next_record(in, line)) throw SchemaError("embedding file is empty");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "dataset_id") throw SchemaError("embedding header must be dataset_id,v0,...");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j + 1] != "v" + std::to_string(j)) {
      throw SchemaError("embedding column " + std::to_string(j + 1) + " must be named v" + std::to_string(j));
    }
  }
  std::vector<MetaFeatureVector> out;
  std::set<std::string> ids;
  while (csv::next_record(in, line)) {
    const auto cells = csv::split(line);
    if (cells.empty() || cells[0].empty()) throw SchemaError("embedding row without a dataset id");
    if (cells.size() != d + 1) {
      throw DimMismatchError("embedding for " + cells[0] + " has " + std::to_string(cells.size() - 1) +
                             " values, expected " + std::to_string(d));
    }
    if (!ids.insert(cells[0]).second) throw SchemaError("repeated embedding for " + cells[0]);
    MetaFeatureVector v;
    v.dataset_id = cells[0];
    v.source = FeatureSource::External;
    for (std::size_t j = 0; j < d; ++j) {
      const auto x = csv::parse_double(cells[j + 1]);
      if (!x || !std::isfinite(*x)) throw SchemaError("embedding for " + cells[0] + " has a non-finite value");
      v.values.push_back(*x);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<MetaFeatureVector> load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open embedding file " + path.string());
  return read_embeddings(in);
}

void write_embeddings(std::ostream& out, const std::vector<MetaFeatureVector>& vectors) {
  const std::size_t d = vectors.empty() ? 0 : vectors.front().values.size();
  for (const auto& v : vectors) {
    if (v.values.size() != d) throw DimMismatchError("embedding widths differ for " + v.dataset_id);
  }
  out << "dataset_id";
  for (std::size_t j = 0; j < d; ++j) out << ",v" << j;
  out << '\n';
  for (const auto& v : vectors) {
    out << v.dataset_id;
    for (double x : v.values) out << ',' << csv::format_double(x);
    out << '\n';
  }
}

}  // namespace compforge
