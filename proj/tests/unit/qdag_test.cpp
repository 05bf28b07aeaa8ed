#include <gtest/gtest.h>

#include <random>

#include "harness.hpp"
#include "qdag/error.hpp"
#include "qdag/qdag.hpp"

namespace qdag {
namespace {

const AttributeSet kBC{"B", "C"};
const AttributeSet kABC{"A", "B", "C"};

CompactQuadtree extension_tree() {
  return build_quadtree(testing::example_extension_relation(), GridParams(2, 3));
}

TEST(Qdag, ExtensionMapRepeatsSourceChildren) {
  const CompactQuadtree s = extension_tree();
  const Qdag q = extend(Qdag::over(s, kBC), kABC);
  EXPECT_EQ(q.map(), (std::vector<ChildIndex>{0, 1, 2, 3, 0, 1, 2, 3}));
  EXPECT_EQ(q.attributes(), kABC);
  EXPECT_EQ(q.source_attributes(), kBC);
  EXPECT_EQ(q.value(), Value::kHalf);
}

TEST(Qdag, ExtensionPathReachesCell) {
  const CompactQuadtree s = extension_tree();
  Qdag q = extend(Qdag::over(s, kBC), kABC);
  const Qdag first = q.child_at(5);
  EXPECT_EQ(first.base(), s.child_at(s.root(), 1));
  for (ChildIndex c : MortonPath{5, 2, 2}) {
    ASSERT_EQ(q.value(), Value::kHalf);
    q = q.child_at(c);
  }
  EXPECT_EQ(q.value(), Value::kOne);
  EXPECT_EQ(morton_encode(Point{4, 3, 4}, GridParams(3, 3)), (MortonPath{5, 2, 2}));
}

TEST(Qdag, IdentityChildMatchesTreeChild) {
  const CompactQuadtree r = build_quadtree(testing::example_relation(), GridParams(2, 4));
  const Qdag q = Qdag::over(r, AttributeSet{"A", "B"});
  for (ChildIndex i = 0; i < 4; ++i) EXPECT_EQ(q.child_at(i).base(), r.child_at(r.root(), i));
}

TEST(Qdag, EmptyTreeHasValueZero) {
  const CompactQuadtree e = CompactQuadtree::empty(GridParams(2, 3));
  const Qdag q = Qdag::over(e, kBC);
  EXPECT_EQ(qdag_value(q), Value::kZero);
  EXPECT_THROW(qdag_child_at(q, 0), ContractViolation);
}

TEST(Qdag, CellValueIsOne) {
  const CompactQuadtree t = build_quadtree({{1, 0}}, GridParams(2, 1));
  const Qdag q = Qdag::over(t, kBC);
  EXPECT_EQ(q.child_at(2).value(), Value::kOne);
  EXPECT_EQ(q.child_at(1).value(), Value::kZero);
}

TEST(Qdag, ExtendToSameSetKeepsMap) {
  const CompactQuadtree s = extension_tree();
  const Qdag q = Qdag::over(s, kBC);
  EXPECT_EQ(extend(q, kBC).map(), q.map());
}

TEST(Qdag, ExtendFromThreeToFourAttributes) {
  const CompactQuadtree t = build_quadtree({{0, 0, 0}}, GridParams(3, 2));
  const Qdag q = extend(Qdag::over(t, AttributeSet{"A", "B", "D"}), AttributeSet{"A", "B", "C", "D"});
  EXPECT_EQ(q.map()[12], 6u);
  EXPECT_EQ(q.map()[14], 6u);
}

TEST(Qdag, ExtendComposes) {
  const CompactQuadtree s = extension_tree();
  const Qdag q = Qdag::over(s, kBC);
  const AttributeSet abcd{"A", "B", "C", "D"};
  EXPECT_EQ(extend(extend(q, kABC), abcd).map(), extend(q, abcd).map());
}

TEST(Qdag, ExtendRejectsMissingAttribute) {
  const CompactQuadtree s = extension_tree();
  EXPECT_THROW(extend(Qdag::over(s, kBC), AttributeSet{"A", "B"}), SchemaError);
  EXPECT_THROW(Qdag::over(s, kABC), SchemaError);
}

TEST(Qdag, ExtendWritesOneEntryPerChildIndex) {
  const CompactQuadtree s = extension_tree();
  for (unsigned extra = 0; extra <= 6; ++extra) {
    std::vector<std::string> names{"B", "C"};
    for (unsigned k = 0; k < extra; ++k) names.push_back("X" + std::to_string(k));
    ExtendCounter counter;
    const Qdag q = extend(Qdag::over(s, kBC), AttributeSet(names), &counter);
    EXPECT_EQ(counter.map_writes, std::uint64_t{1} << names.size());
    EXPECT_EQ(q.map().size(), std::size_t{1} << names.size());
  }
}

// Materializes the completion of a qdag by exhaustive navigation.
void completion(const Qdag& q, unsigned h, Point& prefix_bits, unsigned depth,
                std::vector<Point>& out) {
  const unsigned d = static_cast<unsigned>(q.attributes().size());
  if (q.value() == Value::kZero) return;
  if (depth == h || q.value() == Value::kOne) {
    // Expand the remaining levels.
    const unsigned rest = h - depth;
    const Coord span = Coord{1} << rest;
    std::vector<Coord> offset(d, 0);
    while (true) {
      Point p(d);
      for (unsigned j = 0; j < d; ++j) p[j] = (prefix_bits[j] << rest) | offset[j];
      out.push_back(p);
      unsigned j = 0;
      while (j < d && ++offset[j] == span) offset[j++] = 0;
      if (j == d) break;
    }
    return;
  }
  for (ChildIndex i = 0; i < q.params().fanout(); ++i) {
    for (unsigned j = 0; j < d; ++j) prefix_bits[j] = (prefix_bits[j] << 1) | ((i >> (d - 1 - j)) & 1);
    completion(q.child_at(i), h, prefix_bits, depth + 1, out);
    for (unsigned j = 0; j < d; ++j) prefix_bits[j] >>= 1;
  }
}

TEST(Qdag, CompletionIsCrossProductWithAll) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> pool{"A", "B", "C", "D"};
  for (int k = 0; k < 40; ++k) {
    const std::uint64_t side = 2u << (rng() % 3);
    const unsigned h = testing::height_for_side(side);
    std::vector<std::string> target, source;
    for (const auto& a : pool) {
      if (rng() % 2) target.push_back(a);
    }
    if (target.empty()) target.push_back("B");
    for (const auto& a : target) {
      if (rng() % 2) source.push_back(a);
    }
    if (source.empty()) source.push_back(target.back());
    const AttributeSet src(source), tgt(target);
    const auto data = oracle::gen_instance(rng(), {{"R", source}}, {.side = side, .max_tuples = 12});
    const CompactQuadtree tree = build_quadtree(testing::points_of(data[0].tuples),
                                                GridParams(unsigned(source.size()), h));
    const Qdag q = extend(Qdag::over(tree, src), tgt);
    std::vector<Point> got;
    Point prefix(tgt.size(), 0);
    completion(q, h, prefix, 0, got);
    std::sort(got.begin(), got.end());

    const oracle::Database db = oracle::to_database(data, side);
    const auto all = oracle::eval_bruteforce(
        QueryAst::join({QueryAst::relation("R"), QueryAst::relation("U")}),
        [&] {
          oracle::Database with_all = db;
          oracle::DenseRelation u(tgt, side);
          for (std::uint64_t i = 0; i < u.cells(); ++i) u.set(i, true);
          with_all.emplace("U", u);
          return with_all;
        }(),
        side);
    EXPECT_EQ(got, all.tuples());
  }
}

}  // namespace
}  // namespace qdag
