#include <cmath>
#include <sstream>

#include "compforge/corpus.hpp"
#include "compforge/errors.hpp"
#include "compforge/rng.hpp"
#include "doctest.h"

using namespace compforge;

namespace {

PerformanceCorpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_corpus_csv(in);
}

Matrix column(std::vector<double> v, std::size_t cols = 1) {
  Matrix m(v.size() / cols, cols);
  m.data = std::move(v);
  return m;
}

}  // namespace

TEST_CASE("corpus ingest") {
  const auto c = parse(
      "dataset,horizon,config_id,mse,mae\n"
      "ETTh1,96,m0,0.4,0.3\n"
      "ETTh1,96,m1,0.5,\n"
      "ETTh1,192,m0,0.6,0.5\n"
      "ILI,24,m0,2.0,1.0\n");
  CHECK(c.size() == 4);
  CHECK(c.dataset_count() == 2);
  CHECK(c.config_count() == 2);
  CHECK(c.datasets() == std::vector<std::string>{"ETTh1", "ILI"});
  CHECK(c.has_metric("mae"));
  CHECK_FALSE(c.has_metric("owa"));
  CHECK(c.records()[1].metrics.count("mae") == 0);
}

TEST_CASE("corpus ingest errors") {
  CHECK_THROWS_AS(parse(""), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config,mse\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse,rmse\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse,mae,mae\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse\nA,0,m0,1\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse\nA,96,m0,-1\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse\nA,96,m0,abc\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse\nA,96,m0\n"), SchemaError);
  CHECK_THROWS_AS(parse("dataset,horizon,config_id,mse\nA,96,m0,1\nA,96,m0,2\n"), DuplicateError);
}

TEST_CASE("corpus csv round trip") {
  const auto c = parse("dataset,horizon,config_id,mse,smape\nA,96,m0,0.25,10\nA,96,m1,0.5,\n");
  std::stringstream buf;
  write_corpus_csv(buf, c);
  const auto back = read_corpus_csv(buf);
  REQUIRE(back.size() == 2);
  CHECK(back.records()[0].metrics == c.records()[0].metrics);
  CHECK(back.records()[1].metrics == c.records()[1].metrics);
}

TEST_CASE("rank normalization") {
  const auto c = parse(
      "dataset,horizon,config_id,mse\n"
      "A,96,m0,0.3\nA,96,m1,0.1\nA,96,m2,0.3\nA,96,m3,0.2\n"
      "B,96,m0,5\nB,96,m1,1\n");
  const auto v = rank_normalize(c, "mse");
  REQUIRE(v.entries.size() == 6);
  CHECK(v.entries[0].value == doctest::Approx(3.5 / 4.0));
  CHECK(v.entries[1].value == doctest::Approx(0.25));
  CHECK(v.entries[2].value == doctest::Approx(3.5 / 4.0));
  CHECK(v.entries[3].value == doctest::Approx(0.5));
  CHECK(v.entries[4].value == doctest::Approx(1.0));
  CHECK(v.entries[5].value == doctest::Approx(0.5));
  CHECK_THROWS_AS(rank_normalize(c, "owa"), MissingMetricError);
}

TEST_CASE("grouping by dataset pools horizons") {
  const auto c = parse("dataset,horizon,config_id,mse\nA,96,m0,1\nA,192,m0,3\nA,96,m1,2\n");
  const auto v = rank_normalize(c, "mse", Grouping::Dataset);
  CHECK(v.entries[0].value == doctest::Approx(1.0 / 3.0));
  CHECK(v.entries[1].value == doctest::Approx(1.0));
  CHECK(v.entries[2].value == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("records missing the metric are dropped with a warning") {
  const auto c = parse("dataset,horizon,config_id,mse,mae\nA,96,m0,1,2\nA,96,m1,2,\nA,96,m2,3,1\n");
  const auto v = rank_normalize(c, "mae");
  CHECK(v.entries.size() == 2);
  CHECK_FALSE(v.warnings.empty());
}

TEST_CASE("standardization") {
  const auto c = parse("dataset,horizon,config_id,mse\nA,96,m0,1\nA,96,m1,2\nA,96,m2,3\nB,96,m0,4\nB,96,m1,4\n");
  const auto v = standardize(c, "mse");
  CHECK(v.entries[0].value == doctest::Approx(-1.0));
  CHECK(v.entries[1].value == doctest::Approx(0.0));
  CHECK(v.entries[2].value == doctest::Approx(1.0));
  CHECK(v.entries[3].value == 0.0);
  CHECK(v.entries[4].value == 0.0);
  CHECK_FALSE(v.warnings.empty());
}

TEST_CASE("rank and z-score invariants") {
  Xoshiro256 rng(21);
  std::vector<PerfRecord> base, mono, affine;
  for (int g = 0; g < 50; ++g) {
    const double a = rng.uniform(0.5, 4.0), b = rng.uniform(0.0, 3.0);
    const std::size_t n = 2 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.uniform(0.0, 2.0);
      const std::string ds = "d" + std::to_string(g), id = "m" + std::to_string(i);
      base.push_back({ds, 96, id, {{"mse", x}}});
      mono.push_back({ds, 96, id, {{"mse", std::sqrt(x) + x}}});
      affine.push_back({ds, 96, id, {{"mse", a * x + b}}});
    }
  }
  const PerformanceCorpus c0(base, {"mse"}), c1(mono, {"mse"}), c2(affine, {"mse"});
  const auto r0 = rank_normalize(c0, "mse"), r1 = rank_normalize(c1, "mse");
  const auto z0 = standardize(c0, "mse"), z2 = standardize(c2, "mse");
  for (std::size_t i = 0; i < r0.entries.size(); ++i) {
    CHECK(r0.entries[i].value == r1.entries[i].value);
    CHECK(std::fabs(z0.entries[i].value - z2.entries[i].value) < 1e-9);
  }
}

TEST_CASE("view csv round trip") {
  ScoreView v;
  v.entries = {{"A", 96, "m0", 0.125}, {"B", 192, "m7", -1.5}};
  std::stringstream buf;
  write_view_csv(buf, v);
  const auto back = read_view_csv(buf);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[1].config_id == "m7");
  CHECK(back.entries[1].horizon == 192);
  CHECK(back.entries[1].value == -1.5);
}

// Expected values from tests/oracles/forecast_metrics.py (exact fractions).
TEST_CASE("forecast metrics, single channel") {
  const auto m = compute_metrics(column({1, 2, 3, 4}), column({1.5, 2, 2.5, 5}), 1, Naive2Refs{10.0, 0.5});
  CHECK(std::fabs(m.at("mse") - 0.375) < 1e-12);
  CHECK(std::fabs(m.at("mae") - 0.5) < 1e-12);
  CHECK(std::fabs(m.at("smape") - 20.1010101010101) < 1e-9);
  CHECK(std::fabs(m.at("mape") - 22.916666666666668) < 1e-9);
  CHECK(std::fabs(m.at("mase") - 0.5) < 1e-12);
  CHECK(std::fabs(m.at("owa") - 1.505050505050505) < 1e-9);
}

TEST_CASE("forecast metrics, seasonal two channels") {
  const auto m = compute_metrics(column({1, 10, 3, 12, 2, 9, 5, 14, 4, 13, 6, 11}, 2),
                                 column({2, 10, 3, 11, 1, 10, 4, 15, 5, 12, 6, 12}, 2), 2, Naive2Refs{8.0, 0.75});
  CHECK(std::fabs(m.at("mse") - 0.75) < 1e-12);
  CHECK(std::fabs(m.at("mae") - 0.75) < 1e-12);
  CHECK(std::fabs(m.at("smape") - 18.382662469934623) < 1e-9);
  CHECK(std::fabs(m.at("mape") - 19.864209864209865) < 1e-9);
  CHECK(std::fabs(m.at("mase") - 0.3888888888888889) < 1e-9);
  CHECK(std::fabs(m.at("owa") - 1.4081756636301732) < 1e-9);
}

TEST_CASE("forecast metric availability and errors") {
  const auto m = compute_metrics(column({0, 1, 2}), column({0.5, 1, 2}), 3);
  CHECK(m.count("mape") == 0);
  CHECK(m.count("mase") == 0);
  CHECK(m.count("owa") == 0);
  CHECK_THROWS_AS(compute_metrics(column({1, 2}), column({1, 2, 3}), 1), ShapeError);
  CHECK_THROWS_AS(compute_metrics(column({1, 2}), column({1, 2}), 0), ShapeError);
  CHECK_THROWS_AS(compute_metrics(column({0, 1}), column({0, 1}), 1), DegenerateError);
  CHECK_THROWS_AS(compute_metrics(column({1, 1, 1}), column({1, 2, 1}), 1), DegenerateError);
  CHECK(owa(10.0, 1.0, Naive2Refs{10.0, 1.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(owa(10.0, 1.0, Naive2Refs{0.0, 1.0}), DegenerateError);
}

TEST_CASE("small rank and z-score groups") {
  const auto r = rank_normalize(parse("dataset,horizon,config_id,mse\nA,96,m0,0.3\nA,96,m1,0.1\nA,96,m2,0.2\nB,96,m0,1\n"
                                      "C,96,m0,0.2\nC,96,m1,0.2\n"),
                                "mse");
  CHECK(r.entries[0].value == doctest::Approx(1.0));
  CHECK(r.entries[1].value == doctest::Approx(1.0 / 3.0));
  CHECK(r.entries[2].value == doctest::Approx(2.0 / 3.0));
  CHECK(r.entries[3].value == 1.0);
  CHECK(r.entries[4].value == 0.75);
  CHECK(r.entries[5].value == 0.75);
  const auto z = standardize(parse("dataset,horizon,config_id,mse\nA,96,m0,2\nA,96,m1,4\n"), "mse");
  CHECK(z.entries[0].value == doctest::Approx(-0.7071067811865476));
  CHECK(z.entries[1].value == doctest::Approx(0.7071067811865476));
}

TEST_CASE("hand-computed metric cases") {
  const auto same = compute_metrics(column({1, 2}), column({1, 2}), 1);
  CHECK(same.at("mse") == 0.0);
  CHECK(same.at("mae") == 0.0);
  CHECK(same.at("smape") == 0.0);
  CHECK(compute_metrics(column({1}), column({3}), 1).at("smape") == doctest::Approx(100.0));
  CHECK(compute_metrics(column({1, 2, 3}), column({2, 3, 4}), 1).at("mase") == doctest::Approx(1.0));
  CHECK(owa(10.0, 2.0, Naive2Refs{20.0, 4.0}) == doctest::Approx(0.5));
}
