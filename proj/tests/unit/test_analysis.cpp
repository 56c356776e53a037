#include <cmath>
#include <numeric>

#include "compforge/analysis.hpp"
#include "compforge/errors.hpp"
#include "compforge/rng.hpp"
#include "doctest.h"

using namespace compforge;

namespace {

DesignSpace small_space() {
  std::vector<Dimension> d{{"SeriesNormalization", Stage::SeriesPreprocessing, {"NoNorm", "Stat", "RevIN", "DishTS"}, 0},
                           {"B", Stage::SeriesEncoding, {"b0", "b1"}, 0},
                           {"C", Stage::NetworkOptimization, {"c0", "c1", "c2"}, 0}};
  return DesignSpace("small", std::move(d), {});
}

// Full factorial over `space` replicated on every (dataset, horizon) cell.
template <typename F>
JoinedTable factorial_table(const DesignSpace& space, int datasets, F&& y_of) {
  JoinedTable t;
  const auto configs = enumerate_valid(space, 100000);
  for (int ds = 0; ds < datasets; ++ds)
    for (int h : {96, 192})
      for (std::size_t i = 0; i < configs.size(); ++i)
        t.rows.push_back({"ds" + std::to_string(ds), h, "m" + std::to_string(i), configs[i], y_of(ds, h, configs[i])});
  return t;
}

}  // namespace

TEST_CASE("join attaches assignments") {
  const auto s = small_space();
  const std::vector<PoolEntry> pool{{"m0", Configuration({0, 0, 0})}, {"m1", Configuration({2, 1, 2})}};
  ScoreView v;
  v.entries = {{"A", 96, "m1", 0.5}, {"A", 96, "m0", 1.0}};
  const auto t = join(v, pool, s);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].config == pool[1].config);
  CHECK(t.rows[1].config == pool[0].config);
  CHECK(t.rows[0].y == 0.5);
  v.entries.push_back({"A", 96, "m9", 0.1});
  CHECK_THROWS_AS(join(v, pool, s), UnknownConfigError);
}

TEST_CASE("planted RevIN coefficient on a balanced design") {
  const auto s = small_space();
  const auto t = factorial_table(s, 2, [](int, int, const Configuration& c) { return c[0] == 2 ? -1.0 : 0.0; });
  const auto rep = main_effects(t, s);
  const auto& revin = rep.components[s.global_index(0, 2)];
  CHECK(std::fabs(revin.coef + 1.0) < 1e-9);
  CHECK(std::fabs(rep.components[s.global_index(0, 1)].coef) < 1e-9);
  const auto& base = rep.components[s.global_index(0, 0)];
  CHECK(base.baseline);
  CHECK(base.coef == 0.0);
  CHECK(rep.dimensions[0].share == doctest::Approx(100.0));
}

TEST_CASE("single-dimension signal takes the whole share") {
  const auto s = small_space();
  Xoshiro256 rng(4);
  const double effect[4] = {0.0, 0.7, -1.2, 0.4};
  const auto t = factorial_table(s, 3, [&](int, int, const Configuration& c) { return effect[c[0]] + 0.01 * rng.normal(); });
  const auto rep = main_effects(t, s);
  CHECK(std::fabs(rep.dimensions[0].share - 100.0) <= 0.5);
  CHECK(rep.dimensions[1].share <= 0.5);
  CHECK(rep.dimensions[2].share <= 0.5);
  double total = 0.0;
  for (const auto& d : rep.dimensions) total += d.share;
  CHECK(total == doctest::Approx(100.0));
  CHECK(rep.dimensions[0].p < 1e-10);
}

TEST_CASE("constant response is degenerate") {
  const auto s = small_space();
  const auto t = factorial_table(s, 1, [](int, int, const Configuration&) { return 2.0; });
  CHECK_THROWS_AS(main_effects(t, s), DegenerateError);
  JoinedTable one;
  one.rows.push_back(t.rows.front());
  CHECK_THROWS_AS(main_effects(one, s), InsufficientError);
}

TEST_CASE("cell shifts leave effects unchanged") {
  const auto s = small_space();
  Xoshiro256 rng(9);
  std::vector<double> noise(2 * 2 * 24);
  for (auto& v : noise) v = rng.normal();
  std::size_t k = 0;
  const auto base = factorial_table(s, 2, [&](int, int, const Configuration& c) {
    return 0.3 * c[0] - 0.5 * c[1] + 0.2 * c[2] + noise[k++ % noise.size()];
  });
  auto shifted = base;
  for (auto& r : shifted.rows) r.y += (r.dataset_id == "ds1" ? 7.5 : -2.0) + (r.horizon == 192 ? 3.0 : 0.0);
  const auto a = main_effects(base, s);
  const auto b = main_effects(shifted, s);
  for (std::size_t i = 0; i < a.components.size(); ++i)
    CHECK(std::fabs(a.components[i].coef - b.components[i].coef) < 1e-8);
  for (std::size_t d = 0; d < a.dimensions.size(); ++d)
    CHECK(std::fabs(a.dimensions[d].share - b.dimensions[d].share) < 1e-8);
}

TEST_CASE("serial and parallel effects agree") {
  const auto s = small_space();
  Xoshiro256 rng(12);
  const auto t = factorial_table(s, 2, [&](int, int, const Configuration& c) { return c[0] + rng.normal(); });
  const auto a = main_effects(t, s, {}, kernels::Exec::Serial);
  const auto b = main_effects(t, s, {}, kernels::Exec::Parallel);
  for (std::size_t d = 0; d < a.dimensions.size(); ++d) CHECK(a.dimensions[d].ss == b.dimensions[d].ss);
}

TEST_CASE("confounded dimensions raise AliasError") {
  const auto s = small_space();
  JoinedTable t;
  Xoshiro256 rng(3);
  for (std::uint32_t a = 0; a < 2; ++a)
    for (std::uint32_t c = 0; c < 3; ++c)
      for (int rep = 0; rep < 3; ++rep) t.rows.push_back({"ds", 96, "m", Configuration({a, a, c}), rng.normal()});
  CHECK_THROWS_AS(main_effects(t, s), AliasError);
}

TEST_CASE("stage totals") {
  const auto s = small_space();
  EffectReport rep;
  rep.dimensions = {{0, true, 0, 3, 10.0, 0, 1}, {1, true, 0, 1, 20.0, 0, 1}, {2, true, 0, 2, 70.0, 0, 1}};
  const auto st = stage_shares(rep, s);
  CHECK(st[0] == 10.0);
  CHECK(st[1] == 20.0);
  CHECK(st[2] == 0.0);
  CHECK(st[3] == 70.0);
}

TEST_CASE("interaction means by brute force") {
  const auto s = small_space();
  Xoshiro256 rng(6);
  JoinedTable t;
  for (int i = 0; i < 40; ++i) {
    const Configuration c({static_cast<std::uint32_t>(rng.below(3)), static_cast<std::uint32_t>(rng.below(2)), 0});
    t.rows.push_back({"ds", 96, "m", c, rng.normal()});
  }
  const auto m = interaction_means(t, s, 0, 1);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : t.rows)
        if (r.config[0] == a && r.config[1] == b) {
          sum += r.y;
          ++n;
        }
      CHECK(m.support[a][b] == n);
      if (n == 0) {
        CHECK(std::isnan(m.mean[a][b]));
      } else {
        CHECK(m.mean[a][b] == doctest::Approx(sum / static_cast<double>(n)));
      }
    }
  }
  CHECK(m.support[3][0] == 0);
  CHECK_THROWS_AS(interaction_means(t, s, 1, 1), ShapeError);
  CHECK_THROWS_AS(interaction_means(t, s, 0, 7), ShapeError);
}

TEST_CASE("characteristic split on shifting values") {
  const std::map<std::string, double> shifting{
      {"Covid-19", 0.2363}, {"ECL", 0.0749},    {"ETTh1", 0.0614},   {"ETTh2", 0.4038}, {"ETTm1", 0.0630},
      {"ETTm2", 0.4056},    {"Exchange", 0.3253}, {"fred-md", 0.3943}, {"NASDAQ", 0.9318}, {"ILI", 0.7211},
      {"NYSE", 0.6200},     {"Traffic", 0.0670}, {"Weather", 0.2136}};
  const auto split = characteristic_split(shifting, 3);
  CHECK(split.hi == std::vector<std::string>{"NASDAQ", "ILI", "NYSE"});
  CHECK(split.lo.size() == 3);
  for (const auto& id : {"ETTh1", "ETTm1", "Traffic"})
    CHECK(std::find(split.lo.begin(), split.lo.end(), id) != split.lo.end());
  CHECK_THROWS_AS(characteristic_split(shifting, 7), InsufficientError);
  CHECK_THROWS_AS(characteristic_split(shifting, 0), InsufficientError);
}

TEST_CASE("characteristic split partition and ties") {
  const std::map<std::string, double> four{{"a", 4}, {"b", 3}, {"c", 2}, {"d", 1}};
  const auto half = characteristic_split(four, 2);
  CHECK(half.hi == std::vector<std::string>{"a", "b"});
  CHECK((half.lo == std::vector<std::string>{"c", "d"} || half.lo == std::vector<std::string>{"d", "c"}));
  const std::map<std::string, double> tie{{"x", 5}, {"b", 1}, {"a", 1}, {"z", 0}};
  const auto t = characteristic_split(tie, 2);
  CHECK(t.hi == std::vector<std::string>{"x", "a"});
}

TEST_CASE("component mean differences between dataset groups") {
  const auto s = small_space();
  JoinedTable t;
  for (const char* ds : {"hi1", "lo1"})
    for (std::uint32_t a = 0; a < 4; ++a)
      for (double y : {1.0, 2.0, 3.0}) t.rows.push_back({ds, 96, "m", Configuration({a, 0, 0}), y});
  CharacteristicSplit split{{"hi1"}, {"lo1"}};
  const auto diffs = component_mean_diffs(t, s, split);
  const auto& revin = diffs.at(s.global_index(0, 2));
  REQUIRE(revin.defined);
  CHECK(revin.n_hi == 3);
  CHECK(revin.result.diff == 0.0);
  CHECK(revin.result.d == 0.0);
  CHECK(revin.result.p == doctest::Approx(1.0));
  CHECK_FALSE(diffs.at(s.global_index(1, 1)).defined);
}

TEST_CASE("planted pair interaction dominates") {
  const auto s = small_space();
  Xoshiro256 rng(17);
  const auto t = factorial_table(s, 3, [&](int, int, const Configuration& c) {
    const double inter = (c[0] == 2 && c[1] == 1) ? 1.5 : 0.0;
    return 0.2 * c[2] + inter + 0.05 * rng.normal();
  });
  const auto pairs = pairwise_interaction_eta(t, s);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].dim_a == 0);
  CHECK(pairs[0].dim_b == 1);
  CHECK(pairs[0].estimable);
  CHECK(pairs[0].df == 3);
  CHECK(pairs[0].significant);
  for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[0].eta2 > 10.0 * pairs[i].eta2);
  const auto serial = pairwise_interaction_eta(t, s, {}, 0.05, kernels::Exec::Serial);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(serial[i].eta2 == pairs[i].eta2);
}

TEST_CASE("performance-to-variability ratio") {
  ScoreView v;
  v.entries = {{"d1", 96, "m0", 0.2}, {"d2", 96, "m0", 0.4}};
  auto p = ptv_ratio(v);
  REQUIRE(p.size() == 1);
  CHECK(p[0].mu == doctest::Approx(0.7));
  CHECK(p[0].sigma == doctest::Approx(0.14142135623730950));
  CHECK(p[0].ratio == doctest::Approx(4.9497474683058));
  CHECK_FALSE(p[0].infinite);

  std::swap(v.entries[0], v.entries[1]);
  const auto q = ptv_ratio(v);
  CHECK(q[0].mu == p[0].mu);
  CHECK(q[0].sigma == p[0].sigma);

  ScoreView always_first;
  for (int i = 0; i < 5; ++i) always_first.entries.push_back({"d" + std::to_string(i), 96, "best", 0.1});
  const auto f = ptv_ratio(always_first);
  CHECK(f[0].mu == doctest::Approx(0.9));
  CHECK(f[0].sigma == 0.0);
  CHECK(f[0].infinite);
  CHECK(std::isinf(f[0].ratio));

  ScoreView single;
  single.entries = {{"d1", 96, "m0", 0.5}};
  CHECK_THROWS_AS(ptv_ratio(single), InsufficientError);
}
