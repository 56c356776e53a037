#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "compforge/design_space.hpp"
#include "compforge/kernels.hpp"
#include "compforge/matrix.hpp"
#include "json.hpp"

namespace compforge {

inline constexpr int kCheckpointVersion = 1;

struct MetaHyper {
  std::size_t e = 16;
  std::size_t h = 128;
  std::string activation = "relu";
  std::uint64_t seed = 0;
};

/// Trainable tensors. The same shape doubles as a gradient buffer.
struct MetaParams {
  Matrix codebook;         // V x e
  Matrix w1;               // h x (d + k*e)
  std::vector<double> b1;  // h
  std::vector<double> w2;  // h
  double b2 = 0.0;

  std::array<std::span<double>, 5> tensors();
  std::array<std::span<const double>, 5> tensors() const;
  std::size_t count() const;
  void zero();
};

struct MetaModel {
  MetaHyper hyper;
  std::size_t V = 0;
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<std::size_t> offsets;     // first global index per dimension
  std::vector<std::size_t> dim_sizes;   // components per dimension
  std::string space_fingerprint;
  MetaParams params;

  std::size_t input_width() const { return d + k * hyper.e; }
};

/// Uniform +-1/sqrt(fan_in) layers and a +-0.1 codebook, drawn in the order
/// codebook, w1, b1, w2, b2 from one generator seeded with hyper.seed.
MetaModel init_model(const DesignSpace& space, std::size_t meta_dim, const MetaHyper& hyper);

/// Concatenated codebook rows of the assignment, dimension order.
/// Throws ShapeError on a length or index mismatch.
std::vector<double> embed_config(const MetaModel& model, const Configuration& config);

/// Throws ShapeError when the meta vector or configuration does not fit.
double forward(const MetaModel& model, std::span<const double> meta, const Configuration& config);

std::vector<double> predict_batch(const MetaModel& model, std::span<const double> meta,
                                  std::span<const Configuration> configs,
                                  kernels::Exec exec = kernels::Exec::Parallel);

/// 1 - cov(pred, target) / (sd(pred) sd(target) + eps) with population
/// moments. Throws ShapeError unless both have the same length >= 2. When
/// `grad` is given it receives d loss / d pred.
double pearson_loss(std::span<const double> pred, std::span<const double> target, double eps,
                    std::vector<double>* grad = nullptr);

/// Loss of one same-meta batch and its exact gradient with respect to every
/// parameter (written into `grad`, which is resized and overwritten).
double loss_and_gradient(const MetaModel& model, std::span<const double> meta,
                         std::span<const Configuration> configs, std::span<const double> targets, double eps,
                         MetaParams& grad);

struct MetaExample {
  std::string dataset_id;
  std::string group;  // batch key; one batch per group
  std::vector<double> meta;
  Configuration config;
  double target = 0.0;  // normalized rank in (0, 1]
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  std::size_t patience = 20;
  double eps = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_spearman = 0.0;  // NaN without a validation split
};

struct TrainResult {
  MetaModel model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
  std::vector<std::string> validation_datasets;
};

/// Adam on the Pearson loss, one batch per example group, group order
/// reshuffled every epoch. A share `val_fraction` of datasets (by id) is held
/// out; training stops after `patience` epochs without improvement of the
/// mean validation Spearman correlation and the best weights are restored.
///
/// Throws InsufficientError when a group has fewer than two examples or no
/// training group remains, DivergenceError on a non-finite loss, and
/// std::invalid_argument on a bad config.
TrainResult train(const MetaModel& init, std::span<const MetaExample> examples, const TrainConfig& cfg);

struct Recommendation {
  std::size_t index = 0;  // position in the candidate list
  Configuration config;
  double score = 0.0;
};

/// Candidates by ascending predicted score, ties by assignment order,
/// truncated to k_top. Throws EmptyCandidateError for an empty list.
std::vector<Recommendation> recommend(const MetaModel& model, std::span<const double> meta,
                                      std::span<const Configuration> candidates, std::size_t k_top,
                                      kernels::Exec exec = kernels::Exec::Parallel);

struct SelectionQuality {
  std::size_t picks = 0;
  double top_quartile = 0.0;  // fraction of ranks <= 0.25
  double top_half = 0.0;      // fraction of ranks <= 0.5
  std::array<std::size_t, 10> histogram{};  // bins [0,0.1), ..., [0.9,1.0]
};

SelectionQuality selection_quality(std::span<const double> ranks);

nlohmann::json to_json(const MetaModel& model);
/// Throws SchemaError on a malformed document and FingerprintError when the
/// checkpoint was trained against a different space.
MetaModel model_from_json(const nlohmann::json& doc, const DesignSpace& space);
void save_model(const MetaModel& model, const std::filesystem::path& path);
MetaModel load_model(const std::filesystem::path& path, const DesignSpace& space);

}  // namespace compforge
