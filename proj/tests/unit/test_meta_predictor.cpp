#include <algorithm>
#include <cmath>
#include <filesystem>

#include "compforge/errors.hpp"
#include "compforge/meta_predictor.hpp"
#include "compforge/rng.hpp"
#include "compforge/synthetic.hpp"
#include "doctest.h"

using namespace compforge;

namespace {

MetaModel planted_model(std::size_t d, std::size_t e, std::size_t h, std::uint64_t seed = 1) {
  MetaHyper hyper;
  hyper.e = e;
  hyper.h = h;
  hyper.seed = seed;
  return init_model(planted_space(), d, hyper);
}

}  // namespace

TEST_CASE("model shapes") {
  const auto m = planted_model(4, 3, 5);
  CHECK(m.V == 11);
  CHECK(m.k == 3);
  CHECK(m.input_width() == 4 + 3 * 3);
  CHECK(m.params.codebook.rows == 11);
  CHECK(m.params.codebook.cols == 3);
  CHECK(m.params.w1.rows == 5);
  CHECK(m.params.w1.cols == 13);
  CHECK(m.params.count() == 33 + 65 + 5 + 5 + 1);
  for (double v : m.params.codebook.data) CHECK(std::fabs(v) <= 0.1);
  for (double v : m.params.w1.data) CHECK(std::fabs(v) <= 1.0 / std::sqrt(13.0));
}

TEST_CASE("config embedding") {
  auto m = planted_model(1, 3, 2);
  const Configuration c({1, 2, 0});
  CHECK(embed_config(m, c).size() == 9);
  for (std::size_t r = 0; r < m.V; ++r)
    for (std::size_t j = 0; j < 3; ++j) m.params.codebook(r, j) = 10.0 * static_cast<double>(r) + static_cast<double>(j);
  const auto a = embed_config(m, c);
  const auto b = embed_config(m, Configuration({3, 2, 0}));
  for (std::size_t i = 0; i < 9; ++i) CHECK((a[i] != b[i]) == (i < 3));
  CHECK(a[3] == 10.0 * (4 + 2));
  m.params.codebook.data.assign(m.params.codebook.data.size(), 0.0);
  for (double v : embed_config(m, c)) CHECK(v == 0.0);
  CHECK_THROWS_AS(embed_config(m, Configuration({1, 2})), ShapeError);
  CHECK_THROWS_AS(embed_config(m, Configuration({4, 0, 0})), ShapeError);
}

TEST_CASE("hand forward passes") {
  auto m = planted_model(2, 2, 3);
  m.params.zero();
  m.params.b2 = 0.4;
  const std::vector<double> meta{0.7, -3.0};
  CHECK(forward(m, meta, Configuration({0, 1, 2})) == 0.4);

  auto one = planted_model(1, 2, 1);
  one.params.zero();
  one.params.w1(0, 0) = 1.0;
  one.params.w2[0] = 1.0;
  const std::vector<double> pos{0.3}, neg{-0.3};
  CHECK(forward(one, pos, Configuration({0, 0, 0})) == doctest::Approx(0.3));
  CHECK(forward(one, neg, Configuration({0, 0, 0})) == 0.0);
  CHECK_THROWS_AS(forward(one, meta, Configuration({0, 0, 0})), ShapeError);
}

TEST_CASE("forward is finite and batch matches single") {
  Xoshiro256 rng(2);
  const auto m = planted_model(4, 8, 16, 7);
  const auto configs = enumerate_valid(planted_space(), 100);
  std::vector<double> meta(4);
  for (auto& v : meta) v = rng.uniform(-5.0, 5.0);
  const auto serial = predict_batch(m, meta, configs, kernels::Exec::Serial);
  const auto par = predict_batch(m, meta, configs, kernels::Exec::Parallel);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    CHECK(std::isfinite(serial[i]));
    CHECK(serial[i] == par[i]);
    CHECK(serial[i] == forward(m, meta, configs[i]));
  }
}

TEST_CASE("pearson loss values") {
  const std::vector<double> a{1, 2, 3}, r{3, 2, 1}, c{2, 2, 2};
  CHECK(pearson_loss(a, a, 1e-8) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(pearson_loss(a, r, 1e-8) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(pearson_loss(c, a, 1e-8) == doctest::Approx(1.0));
  std::vector<double> grad;
  pearson_loss(c, a, 1e-8, &grad);
  for (double g : grad) CHECK(std::isfinite(g));
}

TEST_CASE("analytic gradient matches central differences") {
  Xoshiro256 rng(8);
  auto m = planted_model(3, 3, 6, 21);
  const auto configs = enumerate_valid(planted_space(), 10);
  std::vector<double> meta{0.5, -0.2, 0.9}, targets;
  for (std::size_t i = 0; i < configs.size(); ++i) targets.push_back(rng.uniform());
  MetaParams grad;
  loss_and_gradient(m, meta, configs, targets, 1e-8, grad);
  auto P = m.params.tensors();
  const auto G = grad.tensors();
  for (std::size_t t = 0; t < P.size(); ++t) {
    for (std::size_t i = 0; i < P[t].size(); ++i) {
      const double keep = P[t][i];
      MetaParams scratch;
      P[t][i] = keep + 1e-5;
      const double up = loss_and_gradient(m, meta, configs, targets, 1e-8, scratch);
      P[t][i] = keep - 1e-5;
      const double down = loss_and_gradient(m, meta, configs, targets, 1e-8, scratch);
      P[t][i] = keep;
      const double numeric = (up - down) / 2e-5;
      const double scale = std::max({std::fabs(numeric), std::fabs(G[t][i]), 1e-4});
      CHECK(std::fabs(numeric - G[t][i]) / scale < 1e-4);
    }
  }
}

TEST_CASE("training recovers the planted signal") {
  std::size_t good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PlantedParams pp;
    pp.seed = 500 + seed;
    const auto corpus = make_planted_corpus(pp);
    TrainConfig cfg;
    cfg.lr = 1e-2;
    cfg.epochs = 300;
    cfg.seed = seed;
    const auto res = train(planted_model(pp.meta_dim, 8, 32, seed), planted_examples(corpus, corpus.train), cfg);
    double best = -1.0;
    for (const auto& h : res.history) best = std::max(best, h.val_spearman);
    good += best >= 0.9;
    CHECK_FALSE(res.validation_datasets.empty());
  }
  CHECK(good == 20);
}

TEST_CASE("training is deterministic") {
  PlantedParams pp;
  pp.train_datasets = 8;
  const auto corpus = make_planted_corpus(pp);
  const auto examples = planted_examples(corpus, corpus.train);
  TrainConfig cfg;
  cfg.epochs = 15;
  const auto a = train(planted_model(4, 4, 8), examples, cfg);
  const auto b = train(planted_model(4, 4, 8), examples, cfg);
  CHECK(to_json(a.model).dump() == to_json(b.model).dump());
}

TEST_CASE("training preconditions") {
  PlantedParams pp;
  pp.train_datasets = 4;
  const auto corpus = make_planted_corpus(pp);
  auto examples = planted_examples(corpus, corpus.train);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(planted_model(4, 4, 8), examples, cfg), std::invalid_argument);
  cfg.epochs = 3;
  examples.resize(49);  // the second group keeps a single example
  CHECK_THROWS_AS(train(planted_model(4, 4, 8), examples, cfg), InsufficientError);
}

TEST_CASE("recommendation order") {
  const auto configs = enumerate_valid(planted_space(), 100);
  auto flat = planted_model(1, 2, 2);
  flat.params.zero();
  const std::vector<double> meta{0.2};
  const auto recs = recommend(flat, meta, configs, 5);
  REQUIRE(recs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(recs[i].index == i);

  const std::vector<Configuration> one{configs[7]};
  CHECK(recommend(flat, meta, one, 5).front().config == configs[7]);
  CHECK_THROWS_AS(recommend(flat, meta, std::vector<Configuration>{}, 5), EmptyCandidateError);

  // Score = codebook[A][0], zero only for A = a2.
  auto favor = planted_model(1, 1, 1);
  favor.params.zero();
  for (std::size_t r = 0; r < 4; ++r) favor.params.codebook(r, 0) = r == 2 ? 0.0 : 1.0;
  favor.params.w1(0, 1) = 1.0;
  favor.params.w2[0] = 1.0;
  const auto top = recommend(favor, meta, configs, 12);
  for (const auto& r : top) CHECK(r.config[0] == 2);
  for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[i - 1].score <= top[i].score);
}

TEST_CASE("selection quality") {
  const std::vector<double> picks{0.2, 0.6};
  const auto q = selection_quality(picks);
  CHECK(q.picks == 2);
  CHECK(q.top_quartile == 0.5);
  CHECK(q.top_half == 0.5);
  CHECK(q.histogram[2] == 1);
  CHECK(q.histogram[6] == 1);
  const std::vector<double> all{0.1, 0.1, 0.1};
  CHECK(selection_quality(all).top_quartile == 1.0);
  CHECK(selection_quality(all).top_half == 1.0);
}

TEST_CASE("checkpoint round trip") {
  const auto m = planted_model(3, 4, 6, 99);
  const auto path = std::filesystem::temp_directory_path() / "compforge_ckpt_test.json";
  save_model(m, path);
  const auto back = load_model(path, planted_space());
  for (std::size_t t = 0; t < 5; ++t) {
    const auto a = m.params.tensors()[t];
    const auto b = back.params.tensors()[t];
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
  CHECK(back.hyper.seed == 99);
  std::vector<Dimension> dims{{"A", Stage::SeriesPreprocessing, {"a0", "a1", "a2", "a3"}, 0},
                              {"B", Stage::NetworkArchitecture, {"b0", "b1", "b2", "b3"}, 0},
                              {"C", Stage::NetworkOptimization, {"c0", "c1", "x"}, 0}};
  const DesignSpace other("planted", std::move(dims), {});
  CHECK_THROWS_AS(load_model(path, other), FingerprintError);
  auto doc = to_json(m);
  doc["b1"] = std::vector<double>{1.0};
  CHECK_THROWS_AS(model_from_json(doc, planted_space()), SchemaError);
  doc.erase("w1");
  CHECK_THROWS_AS(model_from_json(doc, planted_space()), SchemaError);
  std::filesystem::remove(path);
}
