#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "harness.hpp"
#include "oracle.hpp"

namespace qdag::oracle {
namespace {

TEST(Agm, ClosedForms) {
  const AttributeSet ab{"A", "B"}, bc{"B", "C"}, ac{"A", "C"};
  for (std::uint64_t n : {1u, 4u, 9u, 100u}) {
    const double nd = static_cast<double>(n);
    EXPECT_NEAR(agm_bound({ab, bc, ac}, {n, n, n}), std::pow(nd, 1.5), 1e-6 * nd * nd);
    EXPECT_NEAR(agm_bound({ab, bc}, {n, n}), nd * nd, 1e-6 * nd * nd);
    EXPECT_NEAR(agm_bound({ab}, {n}), nd, 1e-9 * nd);
  }
  const std::vector<AttributeSet> clique{{"A", "B"}, {"A", "C"}, {"A", "D"},
                                         {"B", "C"}, {"B", "D"}, {"C", "D"}};
  EXPECT_NEAR(agm_bound(clique, std::vector<std::uint64_t>(6, 10)), 100.0, 1e-6);
  EXPECT_EQ(agm_bound({ab, bc, ac}, {5, 0, 5}), 0.0);
}

TEST(Agm, CoverUsesCheapEdges) {
  const AttributeSet ab{"A", "B"}, a{"A"}, b{"B"};
  EXPECT_NEAR(agm_bound({ab, a, b}, {1000, 2, 3}), 6.0, 1e-9);
  const auto w = agm_cover({ab, a, b}, {1000, 2, 3});
  EXPECT_NEAR(w[0], 0.0, 1e-12);
  EXPECT_NEAR(w[1], 1.0, 1e-12);
  EXPECT_NEAR(w[2], 1.0, 1e-12);
  const auto tri = agm_cover({{"A", "B"}, {"B", "C"}, {"A", "C"}}, {4, 4, 4});
  for (double x : tri) EXPECT_NEAR(x, 0.5, 1e-12);
}

TEST(BruteForce, Triangle) {
  const Database db{
      {"R", DenseRelation::from_tuples(AttributeSet{"A", "B"}, 2, {{0, 1}, {1, 1}})},
      {"S", DenseRelation::from_tuples(AttributeSet{"B", "C"}, 2, {{1, 0}, {0, 0}})},
      {"T", DenseRelation::from_tuples(AttributeSet{"A", "C"}, 2, {{0, 0}})}};
  const auto out = eval_bruteforce(parse_query("JOIN(R,S,T)"), db, 2);
  EXPECT_EQ(out.tuples(), (std::vector<Tuple>{{0, 1, 0}}));
}

TEST(BruteForce, ComplementAndDisjunction) {
  DenseRelation full(AttributeSet{"A", "B"}, 4);
  for (std::uint64_t i = 0; i < full.cells(); ++i) full.set(i, true);
  const DenseRelation r = DenseRelation::from_tuples(AttributeSet{"A", "B"}, 4, {{1, 2}, {3, 0}});
  const Database db{{"F", full}, {"R", r}};
  EXPECT_EQ(eval_bruteforce(parse_query("NOT(F)"), db, 4).size(), 0u);
  EXPECT_EQ(eval_bruteforce(parse_query("OR(R,R)"), db, 4), r);
  EXPECT_EQ(eval_bruteforce(parse_query("NOT(R)"), db, 4).size(), 14u);
  EXPECT_EQ(eval_bruteforce(parse_query("PROJECT[B](R)"), db, 4).tuples(),
            (std::vector<Tuple>{{0}, {2}}));
  EXPECT_EQ(eval_bruteforce(parse_query("DIFF(F,R)"), db, 4),
            eval_bruteforce(parse_query("NOT(R)"), db, 4));
}

TEST(BruteForce, RejectsHugeGrids) {
  EXPECT_THROW(DenseRelation(AttributeSet{"A", "B", "C", "D"}, 128), std::length_error);
}

TEST(Generator, SeedsAreStable) {
  const std::vector<Schema> schemas{{"R", {"A", "B"}}, {"S", {"B", "C", "D"}}};
  const GenOptions opts{.side = 16, .max_tuples = 40};
  const auto a = gen_instance(42, schemas, opts);
  const auto b = gen_instance(42, schemas, opts);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].tuples, b[i].tuples);
  EXPECT_NE(gen_instance(43, schemas, opts)[1].tuples, a[1].tuples);
}

TEST(Generator, UniformTuplesFitTheGrid) {
  const std::vector<Schema> schemas{{"R", {"C", "A"}}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto data = gen_instance(seed, schemas, {.side = 4, .max_tuples = 50, .min_tuples = 1});
    EXPECT_EQ(data[0].attributes.to_string(), "A,C");
    const auto& t = data[0].tuples;
    EXPECT_GE(t.size(), 1u);
    EXPECT_LE(t.size(), 16u);
    EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
    EXPECT_EQ(std::set<Tuple>(t.begin(), t.end()).size(), t.size());
    for (const auto& x : t) {
      for (auto v : x) EXPECT_LT(v, 4u);
    }
  }
}

TEST(Generator, ClusteredTuplesStayInBoxes) {
  const std::vector<Schema> schemas{{"R", {"A", "B", "C"}}};
  const GenOptions opts{.profile = Profile::kClustered, .side = 64, .max_tuples = 200,
                        .clusters = 2, .width = 4};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = gen_instance(seed, schemas, opts);
    EXPECT_LE(data[0].tuples.size(), 2u * 64u);
    const auto db = testing::load(data, 6);
    const auto s = stats(*db.relations.at("R").tree);
    std::uint64_t groups = 0;
    for (auto g : s.groups_per_level) groups += g;
    EXPECT_LE(groups, 1u + 2u * 2u * 6u * 8u);
  }
}

TEST(Generator, DrawBelowCoversRange) {
  std::mt19937_64 rng(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = draw_below(rng, 7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Generator, RandomFormulaUsesFreshLeaves) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    std::vector<Schema> schemas;
    const QueryAst q = random_formula(rng, 4, schemas);
    std::set<std::string> names;
    for (const auto& s : schemas) names.insert(s.name);
    EXPECT_EQ(names.size(), schemas.size());
    EXPECT_NO_THROW(parse_query(q.to_string()));
  }
}

}  // namespace
}  // namespace qdag::oracle
