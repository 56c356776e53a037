#include <set>

#include "compforge/design_space.hpp"
#include "compforge/errors.hpp"
#include "compforge/rng.hpp"
#include "doctest.h"
#include "support/random_space.hpp"

using namespace compforge;

namespace {

DesignSpace shipped() { return load_space(COMPFORGE_SOURCE_DIR "/spaces/tscomp_table1.json"); }

Configuration by_name(const DesignSpace& s, const std::vector<std::string>& names) {
  std::vector<std::uint32_t> a;
  for (std::size_t d = 0; d < names.size(); ++d) a.push_back(static_cast<std::uint32_t>(*s.component_index(d, names[d])));
  return Configuration(a);
}

}  // namespace

TEST_CASE("shipped space shape") {
  const auto s = shipped();
  CHECK(s.size() == 11);
  CHECK(s.total_components() == 49);
  CHECK(s.rules().size() == 7);
  CHECK(s.optional_rules().size() == 1);
  CHECK(all_pairs(s).size() == 1003);
  CHECK(s.dimension(*s.dimension_index("NetworkBackbone")).components.size() == 16);
  CHECK(s.offset(1) == 4);
}

TEST_CASE("rule checks on named configurations") {
  const auto s = shipped();
  const auto ok = by_name(s, {"RevIN", "NoDecomp", "NoMixing", "ChannelIndepen", "SeriesPatching", "NoEmbedding", "SelfAttn",
                              "NoAttn", "NoRAG", "96", "MSE"});
  CHECK(s.is_valid(ok));
  const auto inverted_ci = by_name(s, {"RevIN", "NoDecomp", "NoMixing", "ChannelIndepen", "InvertedEncoding", "NoEmbedding",
                                       "SelfAttn", "NoAttn", "NoRAG", "96", "MSE"});
  CHECK_FALSE(s.is_valid(inverted_ci));
  const auto llm_sparse = by_name(s, {"RevIN", "NoDecomp", "NoMixing", "ChannelIndepen", "SeriesPatching", "NoEmbedding",
                                      "GPT4TS", "SparseAttn", "NoRAG", "96", "MSE"});
  CHECK_FALSE(s.is_valid(llm_sparse));
  const auto inverted_mlp = by_name(s, {"RevIN", "NoDecomp", "NoMixing", "ChannelDepen", "InvertedEncoding", "NoEmbedding",
                                        "DNN", "NoAttn", "NoRAG", "96", "MSE"});
  CHECK(s.is_valid(inverted_mlp));
  CHECK_FALSE(s.with_optional_rules().is_valid(inverted_mlp));
  CHECK(s.without_rules().is_valid(inverted_ci));
}

TEST_CASE("pair pre-filter") {
  const auto s = shipped();
  const auto tok = *s.dimension_index("SeriesTokenization");
  const auto ci = *s.dimension_index("ChannelIndependence");
  CHECK(s.pair_refuted({ci, *s.component_index(ci, "ChannelIndepen"), tok, *s.component_index(tok, "InvertedEncoding")}));
  CHECK_FALSE(s.pair_refuted({ci, *s.component_index(ci, "ChannelDepen"), tok, *s.component_index(tok, "InvertedEncoding")}));
}

TEST_CASE("shape errors") {
  const auto s = shipped();
  CHECK_THROWS_AS(s.check_shape(Configuration({0, 0})), ShapeError);
  std::vector<std::uint32_t> a(11, 0);
  a[0] = 9;
  CHECK_THROWS_AS(s.check_shape(Configuration(a)), ShapeError);
}

TEST_CASE("schema and reference errors") {
  CHECK_THROWS_AS(parse_space_text("not json"), SchemaError);
  CHECK_THROWS_AS(parse_space_text(R"({"name":"x","dimensions":[]})"), SchemaError);
  CHECK_THROWS_AS(parse_space_text(R"({"name":"x","dimensions":[{"id":"A","stage":"SeriesPreprocessing","components":["a","a"]}]})"),
                  SchemaError);
  CHECK_THROWS_AS(parse_space_text(R"({"name":"x","dimensions":[{"id":"A","stage":"Nope","components":["a"]}]})"),
                  SchemaError);
  CHECK_THROWS_AS(
      parse_space_text(R"({"name":"x","dimensions":[{"id":"A","stage":"SeriesPreprocessing","components":["a","b"]},
        {"id":"B","stage":"SeriesEncoding","components":["c"]}],
        "rules":[{"kind":"forbid","literals":[{"dim":"A","comp":"a"},{"dim":"B","comp":"zz"}]}]})"),
      ReferenceError);
  CHECK_THROWS_AS(
      parse_space_text(R"({"name":"x","dimensions":[{"id":"A","stage":"SeriesPreprocessing","components":["a","b"]}],
        "rules":[{"kind":"require","if":{"dim":"A","comp":"a"},"then_dim":"Q","allowed":["a"]}]})"),
      ReferenceError);
}

TEST_CASE("json round trip and fingerprint") {
  const auto s = shipped();
  const auto again = parse_space(s.to_json());
  CHECK(again.fingerprint() == s.fingerprint());
  CHECK(again.to_json() == s.to_json());
  CHECK(s.with_optional_rules().fingerprint() != s.fingerprint());
}

TEST_CASE("enumeration matches brute force on random spaces") {
  Xoshiro256 rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto s = testing::random_space(rng, 5, 4, 3);
    const auto brute = testing::brute_force_valid_configs(s);
    const auto listed = enumerate_valid(s, 1u << 20);
    CHECK(listed == brute);
    for (const auto& c : listed) CHECK(s.is_valid(c));
  }
}

TEST_CASE("enumeration cap") {
  const auto s = shipped();
  CHECK(enumerate_valid(s, 0).empty());
  const auto few = enumerate_valid(s, 5);
  CHECK(few.size() == 5);
  CHECK(std::is_sorted(few.begin(), few.end()));
}

TEST_CASE("pre-filter never refutes a witnessable pair") {
  Xoshiro256 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto s = testing::random_space(rng, 5, 4, 3);
    const auto witness = testing::witnessable_pairs(s);
    const auto pairs = all_pairs(s);
    const std::set<InteractionPair> kept(pairs.begin(), pairs.end());
    for (const auto& p : witness) CHECK(kept.contains(p));
  }
}

TEST_CASE("partial consistency") {
  const auto s = shipped();
  std::vector<int> partial(11, -1);
  CHECK(s.is_consistent_partial(partial));
  partial[*s.dimension_index("ChannelIndependence")] = 1;
  partial[*s.dimension_index("SeriesTokenization")] = 2;
  CHECK_FALSE(s.is_consistent_partial(partial));
}

TEST_CASE("small spaces") {
  const DesignSpace minimal("one", {{"A", Stage::SeriesPreprocessing, {"a"}, 0}}, {});
  CHECK(minimal.is_valid(Configuration({0})));
  CHECK(all_pairs(minimal).empty());

  // 2x3x2 with dims 1-2 forbidding (y1, z0): 2 of 12 configurations invalid.
  ValidityRule forbid;
  forbid.literals = {{"Y", "y1"}, {"Z", "z0"}};
  const DesignSpace toy("toy",
                        {{"X", Stage::SeriesPreprocessing, {"x0", "x1"}, 0},
                         {"Y", Stage::SeriesEncoding, {"y0", "y1", "y2"}, 0},
                         {"Z", Stage::NetworkArchitecture, {"z0", "z1"}, 0}},
                        {forbid});
  CHECK(enumerate_valid(toy, 100).size() == 10);
  CHECK(enumerate_valid(toy.without_rules(), 100).size() == 12);

  const DesignSpace square("sq", {{"A", Stage::SeriesPreprocessing, {"a", "b"}, 0}, {"B", Stage::SeriesEncoding, {"x", "y"}, 0}}, {});
  const auto lex = enumerate_valid(square, 10);
  CHECK(lex == std::vector<Configuration>{Configuration({0, 0}), Configuration({0, 1}), Configuration({1, 0}),
                                          Configuration({1, 1})});
  ValidityRule ax;
  ax.literals = {{"A", "a"}, {"B", "x"}};
  const DesignSpace square_rule("sq", square.dimensions(), {ax});
  CHECK(all_pairs(square_rule).size() == 3);
}

TEST_CASE("shipped space without rules has 1010 pairs") {
  CHECK(all_pairs(shipped().without_rules()).size() == 1010);
}
