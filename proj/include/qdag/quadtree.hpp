#pragma once

// Compact quadtrees: one 2^d-bit group per internal node, stored level by
// level (root first) and navigated with rank. A 1-bit above the last level
// owns the next group of the following level; an all-zero group marks a full
// subgrid. Groups of the last level hold cell bits.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qdag/bit_vector.hpp"
#include "qdag/grid.hpp"
#include "qdag/value.hpp"

namespace qdag {

// Point counts of a d-dimensional grid overflow 64 bits quickly.
using Count = boost::multiprecision::cpp_int;

class CompactQuadtree;

// A node of a compact quadtree, or a leaf hanging off one. Internal handles
// carry their level-order group index; leaves only carry their value.
class NodeRef {
 public:
  NodeRef() = default;

  static NodeRef leaf(Value value, unsigned depth) { return NodeRef(nullptr, depth, 0, value); }

  Value value() const { return value_; }
  bool is_leaf() const { return value_ != Value::kHalf; }
  unsigned depth() const { return depth_; }
  std::uint64_t group() const { return group_; }
  const CompactQuadtree* tree() const { return tree_; }

  friend bool operator==(const NodeRef&, const NodeRef&) = default;

 private:
  friend class CompactQuadtree;
  NodeRef(const CompactQuadtree* tree, unsigned depth, std::uint64_t group, Value value)
      : tree_(tree), depth_(depth), group_(group), value_(value) {}

  const CompactQuadtree* tree_ = nullptr;
  unsigned depth_ = 0;
  std::uint64_t group_ = 0;
  Value value_ = Value::kZero;
};

class CompactQuadtree {
 public:
  // Empty tree over the default grid.
  CompactQuadtree() = default;

  static CompactQuadtree empty(const GridParams& params);
  static CompactQuadtree full(const GridParams& params);

  // Validates the level structure: one root group, and every level after
  // the first has as many groups as the previous level has 1-bits.
  static CompactQuadtree from_levels(const GridParams& params,
                                     std::vector<std::uint64_t> group_counts,
                                     RankBitVector bits);

  const GridParams& params() const { return params_; }
  bool is_empty() const { return empty_; }

  NodeRef root() const;

  // Constant time. Returns a kZero leaf for an absent child, a kOne leaf for
  // a set cell, otherwise a handle whose value is kOne for full subgrids.
  NodeRef child_at(const NodeRef& node, ChildIndex i) const;

  // Raw child bit of an internal node.
  bool child_bit(const NodeRef& node, ChildIndex i) const {
    return bits_.get(group_offset(node.depth(), node.group()) + i);
  }

  const std::vector<std::uint64_t>& group_counts() const { return group_counts_; }
  const RankBitVector& bits() const { return bits_; }
  std::uint64_t level_offset(unsigned depth) const { return level_offset_[depth]; }

  bool group_is_zero(unsigned depth, std::uint64_t group) const {
    const std::uint64_t off = group_offset(depth, group);
    return bits_.rank1(off + params_.fanout()) == bits_.rank1(off);
  }

  friend bool operator==(const CompactQuadtree& a, const CompactQuadtree& b);

 private:
  std::uint64_t group_offset(unsigned depth, std::uint64_t group) const {
    return level_offset_[depth] + group * params_.fanout();
  }
  void index_levels();

  GridParams params_;
  bool empty_ = true;
  RankBitVector bits_;
  std::vector<std::uint64_t> group_counts_{0};
  std::vector<std::uint64_t> level_offset_{0, 0};
  std::vector<std::uint64_t> ones_before_level_{0, 0};
};

// Output buffer for query evaluation: an arena of nodes where internal nodes
// own a contiguous block of 2^d children. Depth-h nodes are cells.
class MutableQuadtree {
 public:
  enum class Kind : std::uint8_t { kEmpty, kFull, kInternal };
  using NodeId = std::uint32_t;

  explicit MutableQuadtree(const GridParams& params);

  const GridParams& params() const { return params_; }
  NodeId root() const { return 0; }
  std::size_t node_count() const { return nodes_.size(); }

  Kind kind(NodeId n) const { return nodes_[n].kind; }
  NodeId child(NodeId n, ChildIndex i) const { return nodes_[n].first_child + i; }

  void set_leaf(NodeId n, Kind kind);
  // Turns `n` into an internal node with 2^d empty children; returns the
  // id of child 0.
  NodeId expand(NodeId n);
  // Turns internal `n` back into a leaf and frees every node allocated since
  // `n` was expanded. Only valid while nothing outside n's subtree has been
  // expanded after it (depth-first construction).
  void collapse(NodeId n, Kind kind);

 private:
  struct Node {
    Kind kind = Kind::kEmpty;
    NodeId first_child = 0;
  };

  GridParams params_;
  std::vector<Node> nodes_;
};

// Bottom-up canonicalization (all-empty children -> empty leaf, all-full
// children -> full leaf) followed by level-order freezing.
CompactQuadtree compact(const MutableQuadtree& tree);

// The explicit (mutable) form of a compact tree, full leaves kept as leaves.
MutableQuadtree unfold(const CompactQuadtree& tree);

bool structurally_equal(const MutableQuadtree& a, const MutableQuadtree& b);

// Builds the canonical compact tree of a point set. Duplicates are dropped.
// Throws DomainError for out-of-range points.
CompactQuadtree build_quadtree(std::vector<Point> points, const GridParams& params,
                               const AttributeSet* names = nullptr);

// Visits every represented cell once, in Morton order, expanding full leaves.
// The visitor returns false to stop. Returns the number of cells visited.
std::uint64_t for_each_point(const CompactQuadtree& tree,
                             const std::function<bool(std::span<const Coord>)>& visit,
                             std::optional<std::uint64_t> limit = std::nullopt);

std::vector<Point> enumerate(const CompactQuadtree& tree,
                             std::optional<std::uint64_t> limit = std::nullopt);

// Sum over leaves; a full leaf at depth t contributes 2^(d(h-t)).
Count count_points(const CompactQuadtree& tree);

struct TreeStats {
  std::vector<std::uint64_t> groups_per_level;
  std::vector<std::uint64_t> full_leaves_per_level;
  std::uint64_t total_bits = 0;
  std::uint64_t one_bits = 0;
};

TreeStats stats(const CompactQuadtree& tree);

// QDX1 index format, little-endian.
void write_qdx(std::ostream& out, const CompactQuadtree& tree);
CompactQuadtree read_qdx(std::istream& in);
void save_qdx(const std::string& path, const CompactQuadtree& tree);
CompactQuadtree load_qdx(const std::string& path);

}  // namespace qdag
