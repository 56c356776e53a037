#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "compforge/design_space.hpp"
#include "compforge/kernels.hpp"

namespace compforge {

struct PoolParams {
  std::size_t batch_size = 64;
  std::size_t max_rounds = 10000;
  std::uint64_t seed = 0;
  std::vector<Configuration> initial_pool;
};

struct PoolResult {
  std::vector<Configuration> pool;
  std::size_t covered = 0;
  std::vector<InteractionPair> uncovered_pairs;
  std::size_t rounds_used = 0;
  // Covered-pair count after initialization and after every round.
  std::vector<std::size_t> coverage_trace;
};

/// Greedy constrained pairwise-covering pool.
///
/// Each round draws up to `batch_size` distinct valid configurations
/// uniformly at random (rejection sampling) and adds the one covering the
/// most uncovered pairs; ties go to the lexicographically smallest
/// assignment. When no uniform candidate adds coverage, the round is retried
/// with candidates built around still-uncovered pairs: the pair is fixed, the
/// other dimensions are filled at random, and a bounded depth-first search
/// takes over when random completion keeps failing (proving a pair
/// unwitnessable when no completion exists). The loop stops when every pair
/// is covered, no candidate can be produced, a round adds nothing, or
/// `max_rounds` is reached.
///
/// Throws ExhaustedError when a round exhausts its retry budget
/// (100 x batch_size attempts) without a single valid candidate while
/// witnessable pairs may remain.
PoolResult generate_pool(const DesignSpace& space, const PoolParams& params,
                         kernels::Exec exec = kernels::Exec::Parallel);

struct CoverageReport {
  double fraction = 1.0;
  std::size_t covered = 0;
  std::size_t total = 0;
  std::vector<InteractionPair> uncovered;
};

CoverageReport coverage_report(const DesignSpace& space, std::span<const Configuration> pool);

struct PoolEntry {
  std::string config_id;
  Configuration config;
};

/// `config_id,<dim ids...>` with zero-padded ordinal ids.
void write_pool_csv(std::ostream& out, const DesignSpace& space, std::span<const Configuration> pool);
std::vector<PoolEntry> read_pool_csv(std::istream& in, const DesignSpace& space);
std::string pool_config_id(std::size_t ordinal, std::size_t pool_size);

std::string describe_pair(const DesignSpace& space, const InteractionPair& pair);

}  // namespace compforge
