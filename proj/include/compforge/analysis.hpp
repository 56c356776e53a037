#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "compforge/corpus.hpp"
#include "compforge/design_space.hpp"
#include "compforge/kernels.hpp"
#include "compforge/pool.hpp"
#include "compforge/stats.hpp"

namespace compforge {

/// Printed at the top of every analysis report.
inline constexpr const char* kFixedEffectsBanner =
    "mixed-model effects are estimated by fixed-effects least squares with dataset/horizon dummies; "
    "variance shares are Type-II SS normalized by the sum over dimensions";

struct JoinedRow {
  std::string dataset_id;
  int horizon = 0;
  std::string config_id;
  Configuration config;
  double y = 0.0;
};

struct JoinedTable {
  std::vector<JoinedRow> rows;
};

/// One row per view entry, in view order. Throws UnknownConfigError when an
/// entry names a config_id the pool does not contain.
JoinedTable join(const ScoreView& view, std::span<const PoolEntry> pool, const DesignSpace& space);

struct Controls {
  bool dataset = true;
  bool horizon = true;
};

struct ComponentEffect {
  std::size_t dimension = 0;
  std::size_t component = 0;
  bool baseline = false;
  // False when no row uses the component (coefficient not identifiable).
  bool estimable = true;
  double coef = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
};

struct DimensionEffect {
  std::size_t dimension = 0;
  // False when fewer than two components of the dimension are observed.
  bool included = false;
  double ss = 0.0;
  std::size_t df = 0;
  double share = 0.0;
  double f = 0.0;
  double p = 1.0;
};

struct EffectReport {
  std::vector<DimensionEffect> dimensions;
  std::vector<ComponentEffect> components;  // global component order
  double intercept = 0.0;
  double rss = 0.0;
  std::size_t df_resid = 0;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::vector<std::string> warnings;
};

/// Main-effects least squares of y on reference-coded component indicators
/// plus control dummies. With both controls on, one dummy per observed
/// (dataset, horizon) cell is used, so y shifts that are constant within a
/// cell leave the component coefficients unchanged.
///
/// Throws InsufficientError for fewer than two rows, DegenerateError when y
/// is constant, and AliasError when the design is rank deficient.
EffectReport main_effects(const JoinedTable& table, const DesignSpace& space, Controls controls = {},
                          kernels::Exec exec = kernels::Exec::Parallel);

/// Per-stage sum of the included dimension shares.
std::array<double, kStageCount> stage_shares(const EffectReport& report, const DesignSpace& space);

struct InteractionMeans {
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  std::vector<std::vector<double>> mean;  // NaN where unsupported
  std::vector<std::vector<std::size_t>> support;
};

/// Throws ShapeError when dim_a == dim_b or either is out of range.
InteractionMeans interaction_means(const JoinedTable& table, const DesignSpace& space, std::size_t dim_a,
                                   std::size_t dim_b);

struct CharacteristicSplit {
  std::vector<std::string> hi;
  std::vector<std::string> lo;
};

/// hi = the j largest values, lo = the j smallest. Datasets are ordered by
/// value descending with ties on ascending id. Throws InsufficientError
/// unless j >= 1 and at least 2j datasets are given.
CharacteristicSplit characteristic_split(const std::map<std::string, double>& values, std::size_t j);

struct ComponentMeanDiff {
  std::size_t dimension = 0;
  std::size_t component = 0;
  std::size_t n_hi = 0;
  std::size_t n_lo = 0;
  bool defined = false;  // false when either group is too small or has no spread
  stats::MeanDiff result;
};

/// For every component: rows using it in hi datasets against rows using it in
/// lo datasets.
std::vector<ComponentMeanDiff> component_mean_diffs(const JoinedTable& table, const DesignSpace& space,
                                                    const CharacteristicSplit& split,
                                                    stats::TTest test = stats::TTest::EqualVariance);

struct PairInteraction {
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  bool estimable = false;
  std::size_t df = 0;
  double ss = 0.0;
  double eta2 = 0.0;  // partial
  double f = 0.0;
  double p = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
};

/// Main effects plus one dimension-pair interaction at a time. A pair whose
/// interaction columns are all aliased with the main effects is reported as
/// not estimable and excluded from the FDR family. Results follow the
/// (dim_a, dim_b) lexicographic order whatever the thread count.
std::vector<PairInteraction> pairwise_interaction_eta(const JoinedTable& table, const DesignSpace& space,
                                                      Controls controls = {}, double alpha = 0.05,
                                                      kernels::Exec exec = kernels::Exec::Parallel);

struct PtvEntry {
  std::string config_id;
  std::size_t scenarios = 0;
  double mu = 0.0;
  double sigma = 0.0;
  double ratio = 0.0;
  bool infinite = false;
};

/// Scenario score S = 1 - normalized rank; per config the mean, sample sd and
/// their ratio (+inf with the flag set when sd is zero). Configs are sorted by
/// id. Throws InsufficientError when a config has a single scenario.
std::vector<PtvEntry> ptv_ratio(const ScoreView& rank_view);

}  // namespace compforge
