#include "compforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "compforge/errors.hpp"
#include "compforge/linalg.hpp"

namespace compforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Intercept, reference-coded component indicators, then control dummies.
struct Design {
  Matrix X;
  std::vector<double> y;
  kernels::Gram gram;
  std::vector<std::size_t> component_column;  // per global component, kNone if not a column
  std::vector<std::size_t> reference;         // per dimension, reference component
  std::vector<std::vector<std::size_t>> dimension_columns;
  std::vector<std::size_t> observed;  // rows per global component
  std::vector<std::string> names;
  std::vector<std::string> warnings;

  std::vector<std::size_t> all_columns() const {
    std::vector<std::size_t> cols(X.cols);
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
  }
};

Design build_design(const JoinedTable& table, const DesignSpace& space, Controls controls, kernels::Exec exec) {
  const std::size_t n = table.rows.size();
  const std::size_t k = space.size();
  Design d;
  d.observed.assign(space.total_components(), 0);
  for (const auto& r : table.rows) {
    space.check_shape(r.config);
    for (std::size_t dim = 0; dim < k; ++dim) ++d.observed[space.global_index(dim, r.config[dim])];
  }

  d.names.push_back("(intercept)");
  d.component_column.assign(space.total_components(), kNone);
  d.reference.assign(k, 0);
  d.dimension_columns.resize(k);
  std::size_t next = 1;
  for (std::size_t dim = 0; dim < k; ++dim) {
    const auto& D = space.dimension(dim);
    std::size_t ref = D.baseline_index;
    if (d.observed[space.global_index(dim, ref)] == 0) {
      for (std::size_t c = 0; c < D.components.size(); ++c) {
        if (d.observed[space.global_index(dim, c)] > 0) {
          ref = c;
          break;
        }
      }
      if (ref != D.baseline_index) {
        d.warnings.push_back("baseline " + D.components[D.baseline_index] + " of " + D.id +
                             " is unobserved; " + D.components[ref] + " used as reference");
      }
    }
    d.reference[dim] = ref;
    for (std::size_t c = 0; c < D.components.size(); ++c) {
      const auto g = space.global_index(dim, c);
      if (c == ref || d.observed[g] == 0) continue;
      d.component_column[g] = next++;
      d.dimension_columns[dim].push_back(d.component_column[g]);
      d.names.push_back(D.id + "=" + D.components[c]);
    }
  }

  // Control cells; the first (sorted) cell is the reference.
  std::vector<std::size_t> cell_of(n, kNone);
  if (controls.dataset || controls.horizon) {
    using Key = std::pair<std::string, int>;
    auto key_of = [&](const JoinedRow& r) {
      return Key{controls.dataset ? r.dataset_id : std::string(), controls.horizon ? r.horizon : 0};
    };
    std::set<Key> keys;
    for (const auto& r : table.rows) keys.insert(key_of(r));
    std::map<Key, std::size_t> column;
    bool first = true;
    for (const auto& key : keys) {
      if (first) {
        first = false;
        continue;
      }
      column[key] = next++;
      d.names.push_back("control:" + (controls.dataset ? key.first : std::string()) +
                        (controls.horizon ? "/" + std::to_string(key.second) : std::string()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = column.find(key_of(table.rows[i]));
      if (it != column.end()) cell_of[i] = it->second;
    }
  }

  d.X = Matrix(n, next);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = table.rows[i];
    d.X(i, 0) = 1.0;
    for (std::size_t dim = 0; dim < k; ++dim) {
      const auto col = d.component_column[space.global_index(dim, r.config[dim])];
      if (col != kNone) d.X(i, col) = 1.0;
    }
    if (cell_of[i] != kNone) d.X(i, cell_of[i]) = 1.0;
    d.y[i] = r.y;
  }
  d.gram = kernels::gram(d.X, d.y, exec);
  return d;
}

double total_ss(std::span<const double> y) {
  const double mu = stats::mean(y);
  double s = 0.0;
  for (double v : y) s += (v - mu) * (v - mu);
  return s;
}

std::vector<std::size_t> without(const std::vector<std::size_t>& cols, const std::vector<std::size_t>& drop) {
  std::vector<std::size_t> out;
  out.reserve(cols.size());
  for (auto c : cols)
    if (std::find(drop.begin(), drop.end(), c) == drop.end()) out.push_back(c);
  return out;
}

void check_fit_rank(const LeastSquaresFit& fit, const Design& d) {
  std::string aliased;
  for (std::size_t i = 0; i < fit.columns.size(); ++i) {
    if (!fit.aliased[i]) continue;
    if (!aliased.empty()) aliased += ", ";
    aliased += d.names[fit.columns[i]];
  }
  if (!aliased.empty()) throw AliasError("design matrix is rank deficient; aliased columns: " + aliased);
}

}  // namespace

JoinedTable join(const ScoreView& view, std::span<const PoolEntry> pool, const DesignSpace& space) {
  std::unordered_map<std::string, const Configuration*> by_id;
  for (const auto& e : pool) {
    space.check_shape(e.config);
    by_id.emplace(e.config_id, &e.config);
  }
  JoinedTable table;
  table.rows.reserve(view.entries.size());
  for (const auto& e : view.entries) {
    const auto it = by_id.find(e.config_id);
    if (it == by_id.end()) throw UnknownConfigError("config_id '" + e.config_id + "' is not in the pool");
    table.rows.push_back({e.dataset_id, e.horizon, e.config_id, *it->second, e.value});
  }
  return table;
}

EffectReport main_effects(const JoinedTable& table, const DesignSpace& space, Controls controls,
                          kernels::Exec exec) {
  if (table.rows.size() < 2) throw InsufficientError("main effects need at least two rows");
  Design d = build_design(table, space, controls, exec);
  const double tss = total_ss(d.y);
  if (!(tss > 0.0)) throw DegenerateError("response has zero total variance");

  const auto cols = d.all_columns();
  const auto full = fit_least_squares(d.X, d.y, d.gram, cols, exec);
  check_fit_rank(full, d);

  EffectReport report;
  report.n = full.n;
  report.rss = full.rss;
  report.df_resid = full.df_resid;
  report.r_squared = 1.0 - full.rss / tss;
  report.intercept = full.coef[0];
  report.warnings = std::move(d.warnings);

  for (std::size_t dim = 0; dim < space.size(); ++dim) {
    const auto& D = space.dimension(dim);
    for (std::size_t c = 0; c < D.components.size(); ++c) {
      ComponentEffect e;
      e.dimension = dim;
      e.component = c;
      const auto g = space.global_index(dim, c);
      if (c == d.reference[dim]) {
        e.baseline = true;
        e.p = kNaN;
      } else if (d.component_column[g] == kNone) {
        e.estimable = false;
        e.coef = e.se = e.t = e.p = kNaN;
      } else {
        const auto col = d.component_column[g];
        e.coef = full.coef[col];
        e.se = full.se[col];
        e.t = e.coef / e.se;
        e.p = full.df_resid > 0 ? stats::t_two_sided_p(e.t, static_cast<double>(full.df_resid)) : kNaN;
      }
      report.components.push_back(e);
    }
  }

  // Type-II SS: refit without each dimension's columns.
  const std::size_t k = space.size();
  report.dimensions.resize(k);
  std::vector<double> reduced_rss(k, full.rss);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::Parallel)
  for (std::size_t dim = 0; dim < k; ++dim) {
    if (d.dimension_columns[dim].empty()) continue;
    try {
      const auto reduced = without(cols, d.dimension_columns[dim]);
      reduced_rss[dim] = fit_least_squares(d.X, d.y, d.gram, reduced, kernels::Exec::Serial).rss;
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  double ss_sum = 0.0;
  for (std::size_t dim = 0; dim < k; ++dim) {
    auto& e = report.dimensions[dim];
    e.dimension = dim;
    e.df = d.dimension_columns[dim].size();
    e.included = e.df > 0;
    if (!e.included) {
      e.f = e.p = kNaN;
      continue;
    }
    e.ss = std::max(0.0, reduced_rss[dim] - full.rss);
    ss_sum += e.ss;
    if (full.df_resid > 0 && full.rss > 0.0) {
      e.f = (e.ss / static_cast<double>(e.df)) / (full.rss / static_cast<double>(full.df_resid));
      e.p = stats::f_upper_p(e.f, static_cast<double>(e.df), static_cast<double>(full.df_resid));
    } else {
      e.f = full.df_resid > 0 && e.ss > 0.0 ? std::numeric_limits<double>::infinity() : kNaN;
      e.p = full.df_resid > 0 && e.ss > 0.0 ? 0.0 : kNaN;
    }
  }
  if (ss_sum > 0.0) {
    for (auto& e : report.dimensions)
      if (e.included) e.share = 100.0 * e.ss / ss_sum;
  } else {
    report.warnings.push_back("no dimension explains any variance; shares set to 0");
  }
  return report;
}

std::array<double, kStageCount> stage_shares(const EffectReport& report, const DesignSpace& space) {
  std::array<double, kStageCount> totals{};
  for (const auto& e : report.dimensions) {
    if (e.included) totals[static_cast<std::size_t>(space.dimension(e.dimension).stage)] += e.share;
  }
  return totals;
}

InteractionMeans interaction_means(const JoinedTable& table, const DesignSpace& space, std::size_t dim_a,
                                   std::size_t dim_b) {
  if (dim_a == dim_b) throw ShapeError("interaction means need two distinct dimensions");
  if (dim_a >= space.size() || dim_b >= space.size()) throw ShapeError("dimension index out of range");
  const auto na = space.dimension(dim_a).components.size();
  const auto nb = space.dimension(dim_b).components.size();
  InteractionMeans out;
  out.dim_a = dim_a;
  out.dim_b = dim_b;
  std::vector<std::vector<double>> sum(na, std::vector<double>(nb, 0.0));
  out.support.assign(na, std::vector<std::size_t>(nb, 0));
  for (const auto& r : table.rows) {
    space.check_shape(r.config);
    sum[r.config[dim_a]][r.config[dim_b]] += r.y;
    ++out.support[r.config[dim_a]][r.config[dim_b]];
  }
  out.mean.assign(na, std::vector<double>(nb, kNaN));
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      if (out.support[a][b] > 0) out.mean[a][b] = sum[a][b] / static_cast<double>(out.support[a][b]);
  return out;
}

CharacteristicSplit characteristic_split(const std::map<std::string, double>& values, std::size_t j) {
  if (j < 1) throw InsufficientError("split size must be at least 1");
  if (values.size() < 2 * j) {
    throw InsufficientError("need at least " + std::to_string(2 * j) + " datasets, got " +
                            std::to_string(values.size()));
  }
  std::vector<std::pair<std::string, double>> order(values.begin(), values.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  CharacteristicSplit split;
  for (std::size_t i = 0; i < j; ++i) split.hi.push_back(order[i].first);
  for (std::size_t i = order.size() - j; i < order.size(); ++i) split.lo.push_back(order[i].first);
  return split;
}

std::vector<ComponentMeanDiff> component_mean_diffs(const JoinedTable& table, const DesignSpace& space,
                                                    const CharacteristicSplit& split, stats::TTest test) {
  const std::set<std::string> hi(split.hi.begin(), split.hi.end());
  const std::set<std::string> lo(split.lo.begin(), split.lo.end());
  std::vector<std::vector<double>> hi_y(space.total_components()), lo_y(space.total_components());
  for (const auto& r : table.rows) {
    const bool in_hi = hi.contains(r.dataset_id);
    const bool in_lo = lo.contains(r.dataset_id);
    if (!in_hi && !in_lo) continue;
    for (std::size_t dim = 0; dim < space.size(); ++dim) {
      const auto g = space.global_index(dim, r.config[dim]);
      (in_hi ? hi_y : lo_y)[g].push_back(r.y);
    }
  }
  std::vector<ComponentMeanDiff> out;
  for (std::size_t dim = 0; dim < space.size(); ++dim) {
    for (std::size_t c = 0; c < space.dimension(dim).components.size(); ++c) {
      const auto g = space.global_index(dim, c);
      ComponentMeanDiff e;
      e.dimension = dim;
      e.component = c;
      e.n_hi = hi_y[g].size();
      e.n_lo = lo_y[g].size();
      try {
        e.result = stats::cohens_d(hi_y[g], lo_y[g], test);
        e.defined = true;
      } catch (const DegenerateError&) {
        e.result = {kNaN, kNaN, kNaN, kNaN, kNaN};
      }
      out.push_back(e);
    }
  }
  return out;
}

std::vector<PairInteraction> pairwise_interaction_eta(const JoinedTable& table, const DesignSpace& space,
                                                      Controls controls, double alpha, kernels::Exec exec) {
  if (table.rows.size() < 2) throw InsufficientError("interaction tests need at least two rows");
  Design d = build_design(table, space, controls, exec);
  const auto base_cols = d.all_columns();
  const auto base = fit_least_squares(d.X, d.y, d.gram, base_cols, exec);
  check_fit_rank(base, d);

  const std::size_t k = space.size();
  const std::size_t n = d.X.rows;
  const std::size_t p = d.X.cols;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) pairs.emplace_back(a, b);

  std::vector<PairInteraction> out(pairs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::Parallel)
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    try {
      const auto [A, B] = pairs[pi];
      auto& res = out[pi];
      res.dim_a = A;
      res.dim_b = B;
      res.p = res.p_adjusted = res.f = res.eta2 = kNaN;

      // One product column per observed non-reference (a, b) cell.
      std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> cells;
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = table.rows[i].config[A];
        const auto b = table.rows[i].config[B];
        if (a == d.reference[A] || b == d.reference[B]) continue;
        cells[{a, b}].push_back(i);
      }
      if (cells.empty()) continue;
      const std::size_t q = cells.size();

      Matrix X(n, p + q);
      for (std::size_t i = 0; i < n; ++i)
        std::copy_n(&d.X.data[i * p], p, &X.data[i * (p + q)]);
      kernels::Gram g;
      g.xtx = Matrix(p + q, p + q);
      g.xty.assign(p + q, 0.0);
      g.yty = d.gram.yty;
      for (std::size_t r = 0; r < p; ++r) {
        g.xty[r] = d.gram.xty[r];
        for (std::size_t c = 0; c < p; ++c) g.xtx(r, c) = d.gram.xtx(r, c);
      }
      std::size_t j = p;
      for (const auto& [cell, rows] : cells) {
        for (auto i : rows) {
          X(i, j) = 1.0;
          g.xty[j] += d.y[i];
          for (std::size_t c = 0; c < p; ++c) g.xtx(j, c) += d.X(i, c);
        }
        for (std::size_t c = 0; c < p; ++c) g.xtx(c, j) = g.xtx(j, c);
        g.xtx(j, j) = static_cast<double>(rows.size());
        ++j;
      }

      std::vector<std::size_t> cols(p + q);
      std::iota(cols.begin(), cols.end(), 0);
      const auto fit = fit_least_squares(X, d.y, g, cols, kernels::Exec::Serial);
      res.df = fit.rank - base.rank;
      if (res.df == 0 || fit.df_resid == 0) continue;
      res.estimable = true;
      res.ss = std::max(0.0, base.rss - fit.rss);
      res.eta2 = res.ss + fit.rss > 0.0 ? res.ss / (res.ss + fit.rss) : 0.0;
      if (fit.rss > 0.0) {
        res.f = (res.ss / static_cast<double>(res.df)) / (fit.rss / static_cast<double>(fit.df_resid));
        res.p = stats::f_upper_p(res.f, static_cast<double>(res.df), static_cast<double>(fit.df_resid));
      } else {
        res.f = res.ss > 0.0 ? std::numeric_limits<double>::infinity() : kNaN;
        res.p = res.ss > 0.0 ? 0.0 : kNaN;
      }
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> pvals(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) pvals[i] = out[i].estimable ? out[i].p : kNaN;
  const auto fdr = stats::benjamini_hochberg(pvals, alpha);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].p_adjusted = fdr.adjusted[i];
    out[i].significant = fdr.rejected[i];
  }
  return out;
}

std::vector<PtvEntry> ptv_ratio(const ScoreView& rank_view) {
  std::map<std::string, std::vector<double>> scores;
  for (const auto& e : rank_view.entries) scores[e.config_id].push_back(1.0 - e.value);
  std::vector<PtvEntry> out;
  for (const auto& [id, s] : scores) {
    if (s.size() < 2) throw InsufficientError("config " + id + " appears in a single scenario");
    PtvEntry e;
    e.config_id = id;
    e.scenarios = s.size();
    e.mu = stats::mean(s);
    e.sigma = stats::sample_sd(s);
    if (e.sigma > 0.0) {
      e.ratio = e.mu / e.sigma;
    } else {
      e.ratio = std::numeric_limits<double>::infinity();
      e.infinite = true;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace compforge
