#include "compforge/pool.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <tuple>
#include <sstream>

#include "compforge/csv.hpp"
#include "compforge/errors.hpp"
#include "compforge/rng.hpp"

namespace compforge {

namespace {

constexpr std::size_t kRandomCompletionTries = 16;
constexpr std::size_t kSearchNodeBudget = 50000;

struct PairTable {
  std::size_t V = 0;
  std::vector<InteractionPair> pairs;
  std::vector<std::size_t> slot;  // lo * V + hi per pair

  explicit PairTable(const DesignSpace& space) : V(space.total_components()), pairs(all_pairs(space)) {
    slot.reserve(pairs.size());
    for (const auto& p : pairs) {
      slot.push_back(space.global_index(p.dim_a, p.comp_a) * V + space.global_index(p.dim_b, p.comp_b));
    }
  }
};

std::vector<std::uint32_t> to_global(const DesignSpace& space, const Configuration& c) {
  std::vector<std::uint32_t> g(c.size());
  for (std::size_t d = 0; d < c.size(); ++d) g[d] = static_cast<std::uint32_t>(space.global_index(d, c[d]));
  return g;
}

// Clears every pair slot covered by `config`; returns how many were cleared.
std::size_t mark_covered(const DesignSpace& space, const Configuration& config, std::vector<std::uint8_t>& remaining) {
  const auto g = to_global(space, config);
  const std::size_t V = space.total_components();
  std::size_t cleared = 0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      auto& cell = remaining[g[a] * V + g[b]];
      cleared += cell;
      cell = 0;
    }
  }
  return cleared;
}

enum class SearchOutcome { Found, Infeasible, BudgetExceeded };

// Depth-first search for a valid completion of `partial`, visiting values of
// each open dimension in a random order.
SearchOutcome complete_by_search(const DesignSpace& space, std::vector<int>& partial, Xoshiro256& rng) {
  const std::size_t k = space.size();
  std::vector<std::size_t> open;
  for (std::size_t d = 0; d < k; ++d)
    if (partial[d] < 0) open.push_back(d);
  if (!space.is_consistent_partial(partial)) return SearchOutcome::Infeasible;
  if (open.empty()) return SearchOutcome::Found;

  std::vector<std::vector<int>> order(open.size());
  for (std::size_t i = 0; i < open.size(); ++i) {
    const auto n = space.dimension(open[i]).components.size();
    order[i].resize(n);
    for (std::size_t v = 0; v < n; ++v) order[i][v] = static_cast<int>(v);
    rng.shuffle(std::span<int>(order[i]));
  }

  std::vector<std::size_t> cursor(open.size(), 0);
  std::size_t depth = 0;
  std::size_t nodes = 0;
  while (true) {
    if (cursor[depth] >= order[depth].size()) {
      cursor[depth] = 0;
      partial[open[depth]] = -1;
      if (depth == 0) return SearchOutcome::Infeasible;
      --depth;
      continue;
    }
    if (++nodes > kSearchNodeBudget) {
      for (auto d : open) partial[d] = -1;
      return SearchOutcome::BudgetExceeded;
    }
    partial[open[depth]] = order[depth][cursor[depth]++];
    if (!space.is_consistent_partial(partial)) continue;
    if (depth + 1 == open.size()) return SearchOutcome::Found;
    ++depth;
  }
}

}  // namespace

PoolResult generate_pool(const DesignSpace& space, const PoolParams& params, kernels::Exec exec) {
  if (params.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (params.max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");

  const std::size_t k = space.size();
  const PairTable table(space);
  const std::size_t V = table.V;
  std::vector<std::uint8_t> remaining(V * V, 0);
  for (auto s : table.slot) remaining[s] = 1;
  std::size_t remaining_count = table.pairs.size();

  PoolResult result;
  std::set<Configuration> in_pool;
  for (const auto& c : params.initial_pool) {
    space.check_shape(c);
    if (!space.is_valid(c)) throw SchemaError("initial pool contains an invalid configuration: " + space.describe(c));
    if (!in_pool.insert(c).second) continue;
    result.pool.push_back(c);
    remaining_count -= mark_covered(space, c, remaining);
  }
  result.coverage_trace.push_back(table.pairs.size() - remaining_count);

  // Pairs still eligible to seed candidates: uncovered and not proven
  // unwitnessable. Covered entries are dropped lazily on draw.
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < table.pairs.size(); ++i)
    if (remaining[table.slot[i]]) open.push_back(i);

  Xoshiro256 rng(params.seed);
  const std::size_t retry_budget = 100 * params.batch_size;

  // Uniform candidates, as many as the retry budget allows.
  auto draw_uniform = [&](std::vector<Configuration>& candidates) {
    std::set<Configuration> batch_seen;
    for (std::size_t attempts = 0; candidates.size() < params.batch_size && attempts < retry_budget; ++attempts) {
      std::vector<std::uint32_t> a(k);
      for (std::size_t d = 0; d < k; ++d) {
        a[d] = static_cast<std::uint32_t>(rng.below(space.dimension(d).components.size()));
      }
      Configuration c(std::move(a));
      if (!space.is_valid(c) || in_pool.contains(c)) continue;
      if (batch_seen.insert(c).second) candidates.push_back(std::move(c));
    }
  };

  // Candidates built around still-uncovered pairs.
  auto draw_seeded = [&](std::vector<Configuration>& candidates) {
    std::set<Configuration> batch_seen;
    std::size_t attempts = 0;
    while (candidates.size() < params.batch_size && attempts < retry_budget) {
      // Draw an open pair, discarding ones covered since they were queued.
      std::optional<std::size_t> seed_pair;
      std::size_t pick = 0;
      while (!open.empty()) {
        pick = static_cast<std::size_t>(rng.below(open.size()));
        if (remaining[table.slot[open[pick]]]) {
          seed_pair = open[pick];
          break;
        }
        open[pick] = open.back();
        open.pop_back();
      }
      if (!seed_pair) break;
      const auto& pair = table.pairs[*seed_pair];

      std::optional<Configuration> candidate;
      for (std::size_t t = 0; t < kRandomCompletionTries && attempts < retry_budget; ++t) {
        ++attempts;
        std::vector<std::uint32_t> a(k);
        for (std::size_t d = 0; d < k; ++d) {
          a[d] = static_cast<std::uint32_t>(rng.below(space.dimension(d).components.size()));
        }
        a[pair.dim_a] = static_cast<std::uint32_t>(pair.comp_a);
        a[pair.dim_b] = static_cast<std::uint32_t>(pair.comp_b);
        Configuration c(std::move(a));
        if (space.is_valid(c)) {
          candidate = std::move(c);
          break;
        }
      }
      if (!candidate && attempts < retry_budget) {
        ++attempts;
        std::vector<int> partial(k, -1);
        partial[pair.dim_a] = static_cast<int>(pair.comp_a);
        partial[pair.dim_b] = static_cast<int>(pair.comp_b);
        switch (complete_by_search(space, partial, rng)) {
          case SearchOutcome::Found:
            candidate = Configuration(std::vector<std::uint32_t>(partial.begin(), partial.end()));
            break;
          case SearchOutcome::Infeasible:
            open[pick] = open.back();
            open.pop_back();
            break;
          case SearchOutcome::BudgetExceeded:
            break;
        }
      }
      if (!candidate || in_pool.contains(*candidate)) continue;
      if (batch_seen.insert(*candidate).second) candidates.push_back(std::move(*candidate));
    }
  };

  auto best_of = [&](const std::vector<Configuration>& candidates) {
    std::vector<std::uint32_t> rows;
    rows.reserve(candidates.size() * k);
    for (const auto& c : candidates) {
      const auto g = to_global(space, c);
      rows.insert(rows.end(), g.begin(), g.end());
    }
    const auto gains = kernels::coverage_gain(rows, k, remaining, V, exec);
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (gains[i] > gains[best] || (gains[i] == gains[best] && candidates[i] < candidates[best])) best = i;
    }
    return std::pair{best, gains[best]};
  };

  while (remaining_count > 0 && result.rounds_used < params.max_rounds) {
    ++result.rounds_used;

    std::vector<Configuration> candidates;
    draw_uniform(candidates);
    std::size_t best = 0;
    std::uint32_t gain = 0;
    if (!candidates.empty()) std::tie(best, gain) = best_of(candidates);
    if (gain == 0) {
      // Uniform draws made no progress; retry around the uncovered pairs
      // before concluding that nothing more can be covered.
      candidates.clear();
      draw_seeded(candidates);
      if (candidates.empty()) {
        if (open.empty()) break;  // every uncovered pair is unwitnessable
        throw ExhaustedError("no valid candidate found within " + std::to_string(retry_budget) +
                             " attempts; the space appears over-constrained");
      }
      std::tie(best, gain) = best_of(candidates);
    }
    if (gain == 0) break;

    remaining_count -= mark_covered(space, candidates[best], remaining);
    in_pool.insert(candidates[best]);
    result.pool.push_back(std::move(candidates[best]));
    result.coverage_trace.push_back(table.pairs.size() - remaining_count);
  }

  result.covered = table.pairs.size() - remaining_count;
  for (std::size_t i = 0; i < table.pairs.size(); ++i)
    if (remaining[table.slot[i]]) result.uncovered_pairs.push_back(table.pairs[i]);
  return result;
}

CoverageReport coverage_report(const DesignSpace& space, std::span<const Configuration> pool) {
  const PairTable table(space);
  std::vector<std::uint8_t> remaining(table.V * table.V, 0);
  for (auto s : table.slot) remaining[s] = 1;
  for (const auto& c : pool) {
    space.check_shape(c);
    mark_covered(space, c, remaining);
  }
  CoverageReport report;
  report.total = table.pairs.size();
  for (std::size_t i = 0; i < table.pairs.size(); ++i) {
    if (remaining[table.slot[i]])
      report.uncovered.push_back(table.pairs[i]);
    else
      ++report.covered;
  }
  report.fraction = report.total == 0 ? 1.0 : static_cast<double>(report.covered) / static_cast<double>(report.total);
  return report;
}

std::string pool_config_id(std::size_t ordinal, std::size_t pool_size) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(pool_size > 0 ? pool_size - 1 : 0).size());
  auto s = std::to_string(ordinal);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

void write_pool_csv(std::ostream& out, const DesignSpace& space, std::span<const Configuration> pool) {
  out << "config_id";
  for (const auto& d : space.dimensions()) out << ',' << d.id;
  out << '\n';
  for (std::size_t i = 0; i < pool.size(); ++i) {
    space.check_shape(pool[i]);
    out << pool_config_id(i, pool.size());
    for (std::size_t d = 0; d < space.size(); ++d) out << ',' << space.dimension(d).components[pool[i][d]];
    out << '\n';
  }
}

std::vector<PoolEntry> read_pool_csv(std::istream& in, const DesignSpace& space) {
  std::string line;
  if (!csv::next_record(in, line)) throw SchemaError("pool file is empty");
  const auto header = csv::split(line);
  if (header.size() != space.size() + 1 || header[0] != "config_id") {
    throw SchemaError("pool header must be config_id followed by the " + std::to_string(space.size()) +
                      " dimension ids");
  }
  for (std::size_t d = 0; d < space.size(); ++d) {
    if (header[d + 1] != space.dimension(d).id) {
      throw SchemaError("pool header column '" + header[d + 1] + "' does not match dimension '" +
                        space.dimension(d).id + "'");
    }
  }
  std::vector<PoolEntry> entries;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (csv::next_record(in, line)) {
    ++line_no;
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) {
      throw SchemaError("pool line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    }
    if (cells[0].empty() || !ids.insert(cells[0]).second) {
      throw SchemaError("pool line " + std::to_string(line_no) + ": empty or repeated config_id");
    }
    std::vector<std::uint32_t> a(space.size());
    for (std::size_t d = 0; d < space.size(); ++d) {
      const auto c = space.component_index(d, cells[d + 1]);
      if (!c) {
        throw SchemaError("pool line " + std::to_string(line_no) + ": unknown component '" + cells[d + 1] +
                          "' in dimension '" + space.dimension(d).id + "'");
      }
      a[d] = static_cast<std::uint32_t>(*c);
    }
    entries.push_back({cells[0], Configuration(std::move(a))});
  }
  return entries;
}

std::string describe_pair(const DesignSpace& space, const InteractionPair& p) {
  std::ostringstream out;
  out << space.dimension(p.dim_a).id << '=' << space.dimension(p.dim_a).components[p.comp_a] << " x "
      << space.dimension(p.dim_b).id << '=' << space.dimension(p.dim_b).components[p.comp_b];
  return out.str();
}

}  // namespace compforge
