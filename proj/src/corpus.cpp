#include "compforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#include "compforge/csv.hpp"
#include "compforge/errors.hpp"
#include "compforge/stats.hpp"

namespace compforge {

PerformanceCorpus::PerformanceCorpus(std::vector<PerfRecord> records, std::vector<std::string> metric_columns)
    : records_(std::move(records)), metric_columns_(std::move(metric_columns)) {
  std::set<std::tuple<std::string, int, std::string>> seen;
  for (const auto& r : records_) {
    if (r.dataset_id.empty() || r.config_id.empty()) throw SchemaError("record with empty dataset or config id");
    if (r.horizon <= 0) throw SchemaError("record horizon must be positive");
    if (r.metrics.empty()) throw SchemaError("record for " + r.dataset_id + "/" + r.config_id + " has no metrics");
    for (const char* m : {"mse", "mae"}) {
      const auto it = r.metrics.find(m);
      if (it != r.metrics.end() && it->second < 0.0) {
        throw SchemaError(std::string(m) + " must be non-negative (" + r.dataset_id + "/" + r.config_id + ")");
      }
    }
    if (!seen.emplace(r.dataset_id, r.horizon, r.config_id).second) {
      throw DuplicateError("duplicate record (" + r.dataset_id + ", " + std::to_string(r.horizon) + ", " +
                           r.config_id + ")");
    }
  }
}

std::size_t PerformanceCorpus::dataset_count() const { return datasets().size(); }

std::size_t PerformanceCorpus::config_count() const {
  std::set<std::string> ids;
  for (const auto& r : records_) ids.insert(r.config_id);
  return ids.size();
}

std::vector<std::string> PerformanceCorpus::datasets() const {
  std::set<std::string> ids;
  for (const auto& r : records_) ids.insert(r.dataset_id);
  return {ids.begin(), ids.end()};
}

bool PerformanceCorpus::has_metric(const std::string& metric) const {
  return std::any_of(records_.begin(), records_.end(), [&](const auto& r) { return r.metrics.contains(metric); });
}

PerformanceCorpus read_corpus_csv(std::istream& in) {
  std::string line;
  if (!csv::next_record(in, line)) throw SchemaError("corpus file is empty");
  const auto header = csv::split(line);
  if (header.size() < 4 || header[0] != "dataset" || header[1] != "horizon" || header[2] != "config_id" ||
      header[3] != "mse") {
    throw SchemaError("corpus header must start with dataset,horizon,config_id,mse");
  }
  std::vector<std::string> metrics(header.begin() + 3, header.end());
  std::set<std::string> seen_cols;
  for (const auto& m : metrics) {
    if (std::find(kKnownMetrics.begin(), kKnownMetrics.end(), m) == kKnownMetrics.end()) {
      throw SchemaError("unknown metric column '" + m + "'");
    }
    if (!seen_cols.insert(m).second) throw SchemaError("repeated metric column '" + m + "'");
  }

  std::vector<PerfRecord> records;
  std::size_t line_no = 1;
  while (csv::next_record(in, line)) {
    ++line_no;
    const auto cells = csv::split(line);
    const auto where = "corpus line " + std::to_string(line_no);
    if (cells.size() != header.size()) throw SchemaError(where + ": wrong number of cells");
    PerfRecord r;
    r.dataset_id = cells[0];
    const auto h = csv::parse_int(cells[1]);
    if (!h || *h <= 0) throw SchemaError(where + ": horizon must be a positive integer");
    r.horizon = static_cast<int>(*h);
    r.config_id = cells[2];
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      const auto& cell = cells[i + 3];
      if (cell.empty()) continue;
      const auto v = csv::parse_double(cell);
      if (!v) throw SchemaError(where + ": cannot parse " + metrics[i] + " value '" + cell + "'");
      if (std::isnan(*v)) continue;
      r.metrics[metrics[i]] = *v;
    }
    records.push_back(std::move(r));
  }
  return PerformanceCorpus(std::move(records), std::move(metrics));
}

PerformanceCorpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open corpus file " + path);
  return read_corpus_csv(in);
}

void write_corpus_csv(std::ostream& out, const PerformanceCorpus& corpus) {
  out << "dataset,horizon,config_id";
  for (const auto& m : corpus.metric_columns()) out << ',' << m;
  out << '\n';
  for (const auto& r : corpus.records()) {
    out << r.dataset_id << ',' << r.horizon << ',' << r.config_id;
    for (const auto& m : corpus.metric_columns()) {
      out << ',';
      if (const auto it = r.metrics.find(m); it != r.metrics.end()) out << csv::format_double(it->second);
    }
    out << '\n';
  }
}

namespace {

using GroupKey = std::pair<std::string, int>;

// Record indices per group, in record order; records without the metric are
// skipped with a warning.
std::map<GroupKey, std::vector<std::size_t>> group_records(const PerformanceCorpus& corpus, const std::string& metric,
                                                          Grouping grouping, std::vector<std::string>& warnings) {
  if (!corpus.has_metric(metric)) throw MissingMetricError("no record carries metric '" + metric + "'");
  std::map<GroupKey, std::vector<std::size_t>> groups;
  const auto& records = corpus.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.metrics.contains(metric)) {
      warnings.push_back("dropped " + r.dataset_id + "/" + std::to_string(r.horizon) + "/" + r.config_id +
                         ": no " + metric + " value");
      continue;
    }
    const GroupKey key{r.dataset_id, grouping == Grouping::DatasetHorizon ? r.horizon : 0};
    groups[key].push_back(i);
  }
  return groups;
}

}  // namespace

ScoreView rank_normalize(const PerformanceCorpus& corpus, const std::string& metric, Grouping grouping) {
  ScoreView view;
  const auto groups = group_records(corpus, metric, grouping, view.warnings);
  const auto& records = corpus.records();
  for (const auto& [key, idx] : groups) {
    std::vector<double> values;
    values.reserve(idx.size());
    for (auto i : idx) values.push_back(records[i].metrics.at(metric));
    const auto ranks = stats::average_ranks(values);
    const double m = static_cast<double>(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& r = records[idx[j]];
      view.entries.push_back({r.dataset_id, r.horizon, r.config_id, ranks[j] / m});
    }
  }
  return view;
}

ScoreView standardize(const PerformanceCorpus& corpus, const std::string& metric, Grouping grouping) {
  ScoreView view;
  const auto groups = group_records(corpus, metric, grouping, view.warnings);
  const auto& records = corpus.records();
  for (const auto& [key, idx] : groups) {
    std::vector<double> values;
    values.reserve(idx.size());
    for (auto i : idx) values.push_back(records[i].metrics.at(metric));
    const double mu = stats::mean(values);
    const double sd = stats::sample_sd(values);
    const bool degenerate = values.size() < 2 || !(sd > 0.0);
    if (degenerate) {
      view.warnings.push_back("degenerate group " + key.first +
                              (grouping == Grouping::DatasetHorizon ? "/" + std::to_string(key.second) : "") +
                              ": standardized to 0");
    }
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto& r = records[idx[j]];
      view.entries.push_back({r.dataset_id, r.horizon, r.config_id, degenerate ? 0.0 : (values[j] - mu) / sd});
    }
  }
  return view;
}

void write_view_csv(std::ostream& out, const ScoreView& view) {
  out << "dataset,horizon,config_id,value\n";
  for (const auto& e : view.entries) {
    out << e.dataset_id << ',' << e.horizon << ',' << e.config_id << ',' << csv::format_double(e.value) << '\n';
  }
}

ScoreView read_view_csv(std::istream& in) {
  std::string line;
  if (!csv::next_record(in, line)) throw SchemaError("view file is empty");
  if (csv::split(line) != std::vector<std::string>{"dataset", "horizon", "config_id", "value"}) {
    throw SchemaError("view header must be dataset,horizon,config_id,value");
  }
  ScoreView view;
  while (csv::next_record(in, line)) {
    const auto cells = csv::split(line);
    if (cells.size() != 4) throw SchemaError("view row must have 4 cells");
    const auto h = csv::parse_int(cells[1]);
    const auto v = csv::parse_double(cells[3]);
    if (!h || !v) throw SchemaError("cannot parse view row '" + line + "'");
    view.entries.push_back({cells[0], static_cast<int>(*h), cells[2], *v});
  }
  return view;
}

std::map<std::string, double> compute_metrics(const Matrix& truth, const Matrix& pred, std::size_t periodicity,
                                              std::optional<Naive2Refs> refs) {
  if (truth.rows != pred.rows || truth.cols != pred.cols) throw ShapeError("truth and prediction shapes differ");
  if (truth.rows == 0 || truth.cols == 0) throw ShapeError("empty forecast");
  if (periodicity < 1) throw ShapeError("periodicity must be at least 1");

  const std::size_t H = truth.rows;
  const std::size_t C = truth.cols;
  const double count = static_cast<double>(H * C);
  double se = 0.0, ae = 0.0, sape = 0.0, ape = 0.0;
  bool mape_defined = true;
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      const double x = truth(i, c);
      const double xh = pred(i, c);
      const double err = std::fabs(x - xh);
      se += err * err;
      ae += err;
      const double denom = std::fabs(x) + std::fabs(xh);
      if (!(denom > 0.0)) throw DegenerateError("SMAPE denominator is zero at step " + std::to_string(i + 1));
      sape += err / denom;
      if (std::fabs(x) > 0.0)
        ape += err / std::fabs(x);
      else
        mape_defined = false;
    }
  }
  std::map<std::string, double> out;
  out["mse"] = se / count;
  out["mae"] = ae / count;
  out["smape"] = 200.0 * sape / count;
  if (mape_defined) out["mape"] = 100.0 * ape / count;

  if (H > periodicity) {
    const std::size_t m = periodicity;
    double mase_sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      double scale = 0.0;
      for (std::size_t j = m; j < H; ++j) scale += std::fabs(truth(j, c) - truth(j - m, c));
      scale /= static_cast<double>(H - m);
      if (!(scale > 0.0)) throw DegenerateError("MASE scale is zero for channel " + std::to_string(c));
      double mae_c = 0.0;
      for (std::size_t i = 0; i < H; ++i) mae_c += std::fabs(truth(i, c) - pred(i, c));
      mase_sum += mae_c / static_cast<double>(H) / scale;
    }
    out["mase"] = mase_sum / static_cast<double>(C);
    if (refs) out["owa"] = owa(out["smape"], out["mase"], *refs);
  }
  return out;
}

double owa(double smape, double mase, const Naive2Refs& refs) {
  if (!(refs.smape > 0.0) || !(refs.mase > 0.0)) throw DegenerateError("Naive2 references must be positive");
  return 0.5 * (smape / refs.smape + mase / refs.mase);
}

}  // namespace compforge
