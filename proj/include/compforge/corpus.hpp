#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "compforge/matrix.hpp"

namespace compforge {

inline const std::vector<std::string> kKnownMetrics = {"mse", "mae", "smape", "mase", "owa"};

struct PerfRecord {
  std::string dataset_id;
  int horizon = 0;
  std::string config_id;
  std::map<std::string, double> metrics;
};

/// Immutable set of (dataset, horizon, config) performance records.
class PerformanceCorpus {
 public:
  PerformanceCorpus() = default;
  /// Validates record invariants; throws DuplicateError on a repeated
  /// (dataset, horizon, config) triple and SchemaError otherwise.
  PerformanceCorpus(std::vector<PerfRecord> records, std::vector<std::string> metric_columns);

  const std::vector<PerfRecord>& records() const { return records_; }
  const std::vector<std::string>& metric_columns() const { return metric_columns_; }
  std::size_t size() const { return records_.size(); }
  std::size_t dataset_count() const;
  std::size_t config_count() const;
  std::vector<std::string> datasets() const;
  bool has_metric(const std::string& metric) const;

 private:
  std::vector<PerfRecord> records_;
  std::vector<std::string> metric_columns_;
};

/// Header `dataset,horizon,config_id,mse[,mae,smape,mase,owa]`. Optional
/// metric columns may appear in any order; an empty cell means the metric was
/// not recorded for that row.
PerformanceCorpus read_corpus_csv(std::istream& in);
PerformanceCorpus load_corpus(const std::string& path);
void write_corpus_csv(std::ostream& out, const PerformanceCorpus& corpus);

enum class Grouping { DatasetHorizon, Dataset };

struct ViewEntry {
  std::string dataset_id;
  int horizon = 0;
  std::string config_id;
  double value = 0.0;
};

/// A per-record derived score (normalized rank or z-score), plus warnings
/// about dropped records and degenerate groups.
struct ScoreView {
  std::vector<ViewEntry> entries;
  std::vector<std::string> warnings;
};

/// Within each group: ascending rank of the metric (ties share the average
/// rank) divided by the group size. Records with no value for the metric are
/// dropped with a warning. Throws MissingMetricError when no record carries
/// the metric at all.
ScoreView rank_normalize(const PerformanceCorpus& corpus, const std::string& metric,
                         Grouping grouping = Grouping::DatasetHorizon);

/// Within each group: (x - mean) / sample sd. Groups of size one or with zero
/// spread map to 0 and emit a degenerate-group warning.
ScoreView standardize(const PerformanceCorpus& corpus, const std::string& metric,
                      Grouping grouping = Grouping::DatasetHorizon);

void write_view_csv(std::ostream& out, const ScoreView& view);
ScoreView read_view_csv(std::istream& in);

struct Naive2Refs {
  double smape = 0.0;
  double mase = 0.0;
};

/// Forecast accuracy over H x C truth/prediction matrices.
///
/// Always: mse, mae, smape (factor 200, averaged over all H x C points).
/// mape when no truth value is zero. mase when H > periodicity; the scale is
/// the mean absolute seasonal difference of each channel's truth, and the
/// channel MASE values are averaged. owa when `refs` is supplied and mase is
/// available.
///
/// Throws ShapeError on mismatched or empty inputs or periodicity < 1, and
/// DegenerateError when a SMAPE denominator or a MASE scale is zero.
std::map<std::string, double> compute_metrics(const Matrix& truth, const Matrix& pred, std::size_t periodicity,
                                              std::optional<Naive2Refs> refs = std::nullopt);

/// Throws DegenerateError unless both references are positive.
double owa(double smape, double mase, const Naive2Refs& refs);

}  // namespace compforge
