#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "compforge/corpus.hpp"
#include "compforge/design_space.hpp"
#include "compforge/meta_features.hpp"
#include "compforge/meta_predictor.hpp"

namespace compforge {

// Planted meta-corpus: three dimensions A (4), B (4) and C (3), every one of
// the 48 configurations evaluated on every dataset. The score of a config on
// a dataset is
//
//   meta[0] * a[A] + b[B] + c[C],   a = {-1.5, -0.5, 0.5, 1.5},
//                                   b = {0, 0.4, 0.8, 1.2}, c = {0, 0.3, 0.6}
//
// with |meta[0]| drawn from [0.3, 1] and a random sign, so the best A flips
// with the sign of meta[0]. The remaining meta entries are uniform noise on
// [-1, 1]. Lower scores are better.

struct PlantedParams {
  std::size_t train_datasets = 32;
  std::size_t test_datasets = 8;
  std::size_t meta_dim = 4;
  std::uint64_t seed = 0;
};

struct PlantedDataset {
  std::string id;
  std::vector<double> meta;
  std::vector<double> scores;  // per config, in `configs` order
  std::vector<double> ranks;   // normalized rank of each score
  std::size_t optimum = 0;
};

struct PlantedCorpus {
  DesignSpace space;
  std::vector<Configuration> configs;
  std::vector<PlantedDataset> train;
  std::vector<PlantedDataset> test;
};

inline constexpr int kPlantedHorizon = 96;
inline constexpr double kPlantedMseOffset = 5.0;

DesignSpace planted_space();
PlantedCorpus make_planted_corpus(const PlantedParams& params);

std::vector<MetaExample> planted_examples(const PlantedCorpus& corpus, const std::vector<PlantedDataset>& datasets);

/// mse = score + kPlantedMseOffset, config ids from pool_config_id.
PerformanceCorpus planted_performance(const PlantedCorpus& corpus, const std::vector<PlantedDataset>& datasets);
std::vector<MetaFeatureVector> planted_embeddings(const std::vector<PlantedDataset>& datasets);

}  // namespace compforge
