#include "compforge/synthetic.hpp"

#include <algorithm>

#include "compforge/pool.hpp"
#include "compforge/rng.hpp"
#include "compforge/stats.hpp"

namespace compforge {

namespace {

constexpr double kA[] = {-1.5, -0.5, 0.5, 1.5};
constexpr double kB[] = {0.0, 0.4, 0.8, 1.2};
constexpr double kC[] = {0.0, 0.3, 0.6};

PlantedDataset make_dataset(const std::string& id, const std::vector<Configuration>& configs, std::size_t meta_dim,
                            Xoshiro256& rng) {
  PlantedDataset ds;
  ds.id = id;
  const double magnitude = rng.uniform(0.3, 1.0);
  const double sign = rng.below(2) == 0 ? -1.0 : 1.0;
  ds.meta.push_back(sign * magnitude);
  for (std::size_t j = 1; j < meta_dim; ++j) ds.meta.push_back(rng.uniform(-1.0, 1.0));
  for (const auto& c : configs) ds.scores.push_back(ds.meta[0] * kA[c[0]] + kB[c[1]] + kC[c[2]]);
  ds.ranks = stats::average_ranks(ds.scores);
  for (auto& r : ds.ranks) r /= static_cast<double>(configs.size());
  ds.optimum = static_cast<std::size_t>(std::min_element(ds.scores.begin(), ds.scores.end()) - ds.scores.begin());
  return ds;
}

}  // namespace

DesignSpace planted_space() {
  std::vector<Dimension> dims = {
      {"A", Stage::SeriesPreprocessing, {"a0", "a1", "a2", "a3"}, 0},
      {"B", Stage::NetworkArchitecture, {"b0", "b1", "b2", "b3"}, 0},
      {"C", Stage::NetworkOptimization, {"c0", "c1", "c2"}, 0},
  };
  return DesignSpace("planted", std::move(dims), {});
}

PlantedCorpus make_planted_corpus(const PlantedParams& params) {
  if (params.meta_dim < 1) throw std::invalid_argument("meta_dim must be at least 1");
  PlantedCorpus corpus;
  corpus.space = planted_space();
  corpus.configs = enumerate_valid(corpus.space, 1000);
  Xoshiro256 rng(params.seed);
  for (std::size_t i = 0; i < params.train_datasets; ++i) {
    corpus.train.push_back(make_dataset("train" + pool_config_id(i, params.train_datasets), corpus.configs,
                                        params.meta_dim, rng));
  }
  for (std::size_t i = 0; i < params.test_datasets; ++i) {
    corpus.test.push_back(make_dataset("test" + pool_config_id(i, params.test_datasets), corpus.configs,
                                       params.meta_dim, rng));
  }
  return corpus;
}

std::vector<MetaExample> planted_examples(const PlantedCorpus& corpus, const std::vector<PlantedDataset>& datasets) {
  std::vector<MetaExample> out;
  for (const auto& ds : datasets) {
    for (std::size_t j = 0; j < corpus.configs.size(); ++j) {
      out.push_back({ds.id, ds.id + "/" + std::to_string(kPlantedHorizon), ds.meta, corpus.configs[j], ds.ranks[j]});
    }
  }
  return out;
}

PerformanceCorpus planted_performance(const PlantedCorpus& corpus, const std::vector<PlantedDataset>& datasets) {
  std::vector<PerfRecord> records;
  for (const auto& ds : datasets) {
    for (std::size_t j = 0; j < corpus.configs.size(); ++j) {
      records.push_back({ds.id, kPlantedHorizon, pool_config_id(j, corpus.configs.size()),
                         {{"mse", ds.scores[j] + kPlantedMseOffset}}});
    }
  }
  return PerformanceCorpus(std::move(records), {"mse"});
}

std::vector<MetaFeatureVector> planted_embeddings(const std::vector<PlantedDataset>& datasets) {
  std::vector<MetaFeatureVector> out;
  for (const auto& ds : datasets) out.push_back({ds.id, ds.meta, FeatureSource::External});
  return out;
}

}  // namespace compforge
