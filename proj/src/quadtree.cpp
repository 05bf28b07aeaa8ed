#include "qdag/quadtree.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "qdag/error.hpp"

namespace qdag {

namespace {

// Appends one group given as words, `fanout` bits long.
void append_group(RankBitVector& bits, std::span<const std::uint64_t> words,
                  ChildIndex fanout) {
  ChildIndex remaining = fanout;
  for (std::uint64_t w : words) {
    const unsigned take = std::min<ChildIndex>(remaining, 64);
    bits.append(w, take);
    remaining -= take;
  }
}

void append_zero_group(RankBitVector& bits, ChildIndex fanout) {
  for (ChildIndex done = 0; done < fanout; done += 64) {
    bits.append(0, std::min<ChildIndex>(fanout - done, 64));
  }
}

// 2^(d*(h-depth)) when it fits 64 bits, otherwise nullopt.
std::optional<std::uint64_t> subgrid_cells(const GridParams& params, unsigned depth) {
  const unsigned exponent = params.dims() * (params.height() - depth);
  if (exponent >= 64) return std::nullopt;
  return std::uint64_t{1} << exponent;
}

}  // namespace

// ---------------------------------------------------------------------------
// CompactQuadtree

CompactQuadtree CompactQuadtree::empty(const GridParams& params) {
  CompactQuadtree tree;
  tree.params_ = params;
  tree.empty_ = true;
  tree.group_counts_.assign(params.height(), 0);
  tree.bits_.build_rank();
  tree.index_levels();
  return tree;
}

CompactQuadtree CompactQuadtree::full(const GridParams& params) {
  CompactQuadtree tree;
  tree.params_ = params;
  tree.empty_ = false;
  tree.group_counts_.assign(params.height(), 0);
  tree.group_counts_[0] = 1;
  append_zero_group(tree.bits_, params.fanout());
  tree.bits_.build_rank();
  tree.index_levels();
  return tree;
}

CompactQuadtree CompactQuadtree::from_levels(const GridParams& params,
                                             std::vector<std::uint64_t> group_counts,
                                             RankBitVector bits) {
  const unsigned h = params.height();
  if (group_counts.size() != h) throw FormatError("expected one group count per level");
  std::uint64_t total_groups = 0;
  for (auto c : group_counts) total_groups += c;
  if (bits.size() != total_groups * params.fanout()) {
    throw FormatError("bit length does not match the group counts");
  }
  CompactQuadtree tree;
  tree.params_ = params;
  tree.group_counts_ = std::move(group_counts);
  tree.bits_ = std::move(bits);
  tree.bits_.build_rank();
  tree.empty_ = total_groups == 0;
  tree.index_levels();
  if (tree.empty_) return tree;
  if (tree.group_counts_[0] != 1) throw FormatError("root level must hold exactly one group");
  for (unsigned t = 0; t + 1 < h; ++t) {
    const std::uint64_t ones = tree.ones_before_level_[t + 1] - tree.ones_before_level_[t];
    if (tree.group_counts_[t + 1] != ones) {
      throw FormatError("level " + std::to_string(t + 1) + " has " +
                        std::to_string(tree.group_counts_[t + 1]) + " groups, parent level has " +
                        std::to_string(ones) + " 1-bits");
    }
  }
  return tree;
}

void CompactQuadtree::index_levels() {
  const unsigned h = params_.height();
  level_offset_.assign(h + 1, 0);
  ones_before_level_.assign(h + 1, 0);
  for (unsigned t = 0; t < h; ++t) {
    level_offset_[t + 1] = level_offset_[t] + group_counts_[t] * params_.fanout();
  }
  for (unsigned t = 0; t <= h; ++t) ones_before_level_[t] = bits_.rank1(level_offset_[t]);
}

NodeRef CompactQuadtree::root() const {
  if (empty_) return NodeRef::leaf(Value::kZero, 0);
  return NodeRef(this, 0, 0, group_is_zero(0, 0) ? Value::kOne : Value::kHalf);
}

NodeRef CompactQuadtree::child_at(const NodeRef& node, ChildIndex i) const {
  if (node.is_leaf()) throw ContractViolation("child_at called on a leaf");
  if (i >= params_.fanout()) throw ContractViolation("child index out of range");
  const unsigned depth = node.depth();
  const std::uint64_t pos = group_offset(depth, node.group()) + i;
  if (!bits_.get(pos)) return NodeRef::leaf(Value::kZero, depth + 1);
  if (depth + 1 == params_.height()) return NodeRef::leaf(Value::kOne, depth + 1);
  const std::uint64_t group = bits_.rank1(pos) - ones_before_level_[depth];
  const Value value = group_is_zero(depth + 1, group) ? Value::kOne : Value::kHalf;
  return NodeRef(this, depth + 1, group, value);
}

bool operator==(const CompactQuadtree& a, const CompactQuadtree& b) {
  return a.params_ == b.params_ && a.empty_ == b.empty_ && a.group_counts_ == b.group_counts_ &&
         a.bits_.size() == b.bits_.size() && a.bits_.words() == b.bits_.words();
}

// ---------------------------------------------------------------------------
// MutableQuadtree

MutableQuadtree::MutableQuadtree(const GridParams& params) : params_(params), nodes_(1) {}

void MutableQuadtree::set_leaf(NodeId n, Kind kind) {
  if (kind == Kind::kInternal) throw ContractViolation("set_leaf needs a leaf kind");
  nodes_[n] = Node{kind, 0};
}

MutableQuadtree::NodeId MutableQuadtree::expand(NodeId n) {
  const auto first = static_cast<NodeId>(nodes_.size());
  if (nodes_.size() + params_.fanout() > std::numeric_limits<NodeId>::max()) {
    throw DomainError("output quadtree exceeds the node arena");
  }
  nodes_.resize(nodes_.size() + params_.fanout());
  nodes_[n] = Node{Kind::kInternal, first};
  return first;
}

void MutableQuadtree::collapse(NodeId n, Kind kind) {
  if (nodes_[n].kind == Kind::kInternal && nodes_[n].first_child > n) {
    nodes_.resize(nodes_[n].first_child);
  }
  set_leaf(n, kind);
}

namespace {

using Kind = MutableQuadtree::Kind;

Kind canonicalize(const MutableQuadtree& tree, MutableQuadtree::NodeId n, unsigned depth,
                  std::vector<Kind>& canon) {
  Kind kind = tree.kind(n);
  if (kind == Kind::kInternal) {
    if (depth >= tree.params().height()) throw ContractViolation("cell node has children");
    bool all_empty = true;
    bool all_full = true;
    for (ChildIndex i = 0; i < tree.params().fanout(); ++i) {
      const Kind c = canonicalize(tree, tree.child(n, i), depth + 1, canon);
      all_empty = all_empty && c == Kind::kEmpty;
      all_full = all_full && c == Kind::kFull;
    }
    if (all_empty) kind = Kind::kEmpty;
    else if (all_full) kind = Kind::kFull;
  }
  canon[n] = kind;
  return kind;
}

}  // namespace

CompactQuadtree compact(const MutableQuadtree& tree) {
  const GridParams& params = tree.params();
  std::vector<Kind> canon(tree.node_count(), Kind::kEmpty);
  const Kind root = canonicalize(tree, tree.root(), 0, canon);
  if (root == Kind::kEmpty) return CompactQuadtree::empty(params);
  if (root == Kind::kFull) return CompactQuadtree::full(params);

  const unsigned h = params.height();
  const ChildIndex fanout = params.fanout();
  std::vector<std::uint64_t> counts(h, 0);
  RankBitVector bits;
  std::vector<std::uint64_t> group((fanout + 63) / 64);
  std::vector<MutableQuadtree::NodeId> level{tree.root()};
  std::vector<MutableQuadtree::NodeId> next;
  for (unsigned t = 0; t < h; ++t) {
    next.clear();
    counts[t] = level.size();
    for (auto n : level) {
      if (canon[n] == Kind::kFull) {
        append_zero_group(bits, fanout);
        continue;
      }
      std::fill(group.begin(), group.end(), 0);
      for (ChildIndex i = 0; i < fanout; ++i) {
        const auto c = tree.child(n, i);
        if (canon[c] == Kind::kEmpty) continue;
        group[i >> 6] |= std::uint64_t{1} << (i & 63);
        if (t + 1 < h) next.push_back(c);
      }
      append_group(bits, group, fanout);
    }
    level.swap(next);
  }
  return CompactQuadtree::from_levels(params, std::move(counts), std::move(bits));
}

MutableQuadtree unfold(const CompactQuadtree& tree) {
  MutableQuadtree out(tree.params());
  std::function<void(const NodeRef&, MutableQuadtree::NodeId)> rec =
      [&](const NodeRef& node, MutableQuadtree::NodeId id) {
        switch (node.value()) {
          case Value::kZero: out.set_leaf(id, Kind::kEmpty); return;
          case Value::kOne: out.set_leaf(id, Kind::kFull); return;
          default: break;
        }
        const auto first = out.expand(id);
        for (ChildIndex i = 0; i < tree.params().fanout(); ++i) {
          rec(tree.child_at(node, i), first + i);
        }
      };
  rec(tree.root(), out.root());
  return out;
}

bool structurally_equal(const MutableQuadtree& a, const MutableQuadtree& b) {
  if (!(a.params() == b.params())) return false;
  std::function<bool(MutableQuadtree::NodeId, MutableQuadtree::NodeId)> rec =
      [&](MutableQuadtree::NodeId x, MutableQuadtree::NodeId y) {
        if (a.kind(x) != b.kind(y)) return false;
        if (a.kind(x) != Kind::kInternal) return true;
        for (ChildIndex i = 0; i < a.params().fanout(); ++i) {
          if (!rec(a.child(x, i), b.child(y, i))) return false;
        }
        return true;
      };
  return rec(a.root(), b.root());
}

// ---------------------------------------------------------------------------
// Construction from points

CompactQuadtree build_quadtree(std::vector<Point> points, const GridParams& params,
                               const AttributeSet* names) {
  for (const auto& p : points) {
    // Range check with attribute names in the message.
    if (p.size() != params.dims() ||
        std::any_of(p.begin(), p.end(), [&](Coord c) { return c >= params.side(); })) {
      (void)morton_encode(p, params, names);
    }
  }
  std::sort(points.begin(), points.end(),
            [](const Point& a, const Point& b) { return morton_less(a, b); });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.empty()) return CompactQuadtree::empty(params);

  const unsigned h = params.height();
  const ChildIndex fanout = params.fanout();
  std::vector<std::uint64_t> counts(h, 0);
  RankBitVector bits;
  std::vector<std::uint64_t> group((fanout + 63) / 64);

  struct Range {
    std::size_t lo, hi;
  };
  std::vector<Range> level{{0, points.size()}};
  std::vector<Range> next;
  for (unsigned t = 0; t < h; ++t) {
    next.clear();
    counts[t] = level.size();
    const auto capacity = subgrid_cells(params, t);
    for (const Range& r : level) {
      if (capacity && r.hi - r.lo == *capacity) {
        append_zero_group(bits, fanout);
        continue;
      }
      std::fill(group.begin(), group.end(), 0);
      std::size_t lo = r.lo;
      while (lo < r.hi) {
        const ChildIndex code = morton_code_at(points[lo], t, params);
        std::size_t hi = lo + 1;
        while (hi < r.hi && morton_code_at(points[hi], t, params) == code) ++hi;
        group[code >> 6] |= std::uint64_t{1} << (code & 63);
        if (t + 1 < h) next.push_back({lo, hi});
        lo = hi;
      }
      append_group(bits, group, fanout);
    }
    level.swap(next);
  }
  return CompactQuadtree::from_levels(params, std::move(counts), std::move(bits));
}

// ---------------------------------------------------------------------------
// Enumeration and accounting

namespace {

class PointWalker {
 public:
  PointWalker(const CompactQuadtree& tree, const std::function<bool(std::span<const Coord>)>& visit,
              std::optional<std::uint64_t> limit)
      : tree_(tree), visit_(visit), limit_(limit), cur_(tree.params().dims(), 0) {}

  std::uint64_t run() {
    if (limit_ && *limit_ == 0) return 0;
    walk(tree_.root());
    return visited_;
  }

 private:
  void place(unsigned depth, ChildIndex i) {
    const unsigned d = tree_.params().dims();
    const unsigned shift = tree_.params().height() - 1 - depth;
    for (unsigned j = 0; j < d; ++j) {
      const Coord bit = (i >> (d - 1 - j)) & 1u;
      cur_[j] = (cur_[j] & ~(Coord{1} << shift)) | (bit << shift);
    }
  }

  bool emit() {
    ++visited_;
    if (!visit_(cur_)) return false;
    return !(limit_ && visited_ >= *limit_);
  }

  bool walk_full(unsigned depth) {
    if (depth == tree_.params().height()) return emit();
    for (ChildIndex i = 0; i < tree_.params().fanout(); ++i) {
      place(depth, i);
      if (!walk_full(depth + 1)) return false;
    }
    return true;
  }

  bool walk(const NodeRef& node) {
    switch (node.value()) {
      case Value::kZero: return true;
      case Value::kOne: return walk_full(node.depth());
      default: break;
    }
    for (ChildIndex i = 0; i < tree_.params().fanout(); ++i) {
      if (!tree_.child_bit(node, i)) continue;
      place(node.depth(), i);
      if (!walk(tree_.child_at(node, i))) return false;
    }
    return true;
  }

  const CompactQuadtree& tree_;
  const std::function<bool(std::span<const Coord>)>& visit_;
  std::optional<std::uint64_t> limit_;
  Point cur_;
  std::uint64_t visited_ = 0;
};

}  // namespace

std::uint64_t for_each_point(const CompactQuadtree& tree,
                             const std::function<bool(std::span<const Coord>)>& visit,
                             std::optional<std::uint64_t> limit) {
  return PointWalker(tree, visit, limit).run();
}

std::vector<Point> enumerate(const CompactQuadtree& tree, std::optional<std::uint64_t> limit) {
  std::vector<Point> out;
  for_each_point(
      tree,
      [&](std::span<const Coord> p) {
        out.emplace_back(p.begin(), p.end());
        return true;
      },
      limit);
  return out;
}

Count count_points(const CompactQuadtree& tree) {
  Count total = 0;
  if (tree.is_empty()) return total;
  const GridParams& params = tree.params();
  const unsigned d = params.dims();
  const unsigned h = params.height();
  const ChildIndex fanout = params.fanout();
  for (unsigned t = 0; t < h; ++t) {
    const std::uint64_t base = tree.level_offset(t);
    for (std::uint64_t g = 0; g < tree.group_counts()[t]; ++g) {
      if (tree.group_is_zero(t, g)) {
        total += Count(1) << (d * (h - t));
      } else if (t + 1 == h) {
        const std::uint64_t off = base + g * fanout;
        total += tree.bits().rank1(off + fanout) - tree.bits().rank1(off);
      }
    }
  }
  return total;
}

TreeStats stats(const CompactQuadtree& tree) {
  TreeStats s;
  const unsigned h = tree.params().height();
  s.groups_per_level = tree.group_counts();
  s.full_leaves_per_level.assign(h, 0);
  for (unsigned t = 0; t < h; ++t) {
    for (std::uint64_t g = 0; g < tree.group_counts()[t]; ++g) {
      if (tree.group_is_zero(t, g)) ++s.full_leaves_per_level[t];
    }
  }
  s.total_bits = tree.bits().size();
  s.one_bits = tree.bits().count_ones();
  return s;
}

// ---------------------------------------------------------------------------
// QDX1 serialization

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'D', 'X', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kFlagEmpty = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    buf[k] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * k)) & 0xff);
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw FormatError(std::string("truncated index: missing ") + what);
  }
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) v |= std::uint64_t{buf[k]} << (8 * k);
  return static_cast<T>(v);
}

}  // namespace

void write_qdx(std::ostream& out, const CompactQuadtree& tree) {
  const GridParams& params = tree.params();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint8_t>(out, kVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(params.dims()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(params.height()));
  put_le<std::uint8_t>(out, tree.is_empty() ? kFlagEmpty : 0);
  const Count count = count_points(tree);
  const std::uint64_t stored = count > Count(std::numeric_limits<std::uint64_t>::max())
                                   ? std::numeric_limits<std::uint64_t>::max()
                                   : count.convert_to<std::uint64_t>();
  put_le<std::uint64_t>(out, stored);
  for (auto c : tree.group_counts()) {
    if (c > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("level holds more groups than QDX1 can record");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c));
  }
  const RankBitVector& bits = tree.bits();
  for (unsigned t = 0; t < params.height(); ++t) {
    const std::uint64_t begin = tree.level_offset(t);
    const std::uint64_t end = tree.level_offset(t + 1);
    std::vector<char> bytes((end - begin + 7) / 8, 0);
    for (std::uint64_t k = begin; k < end; ++k) {
      if (bits.get(k)) bytes[(k - begin) >> 3] |= static_cast<char>(1u << ((k - begin) & 7));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw FormatError("failed to write index");
}

CompactQuadtree read_qdx(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a QDX1 index (bad magic)");
  }
  const auto version = get_le<std::uint8_t>(in, "version");
  if (version != kVersion) throw FormatError("unsupported index version " + std::to_string(version));
  const auto d = get_le<std::uint8_t>(in, "dimension");
  const auto h = get_le<std::uint8_t>(in, "height");
  const auto flags = get_le<std::uint8_t>(in, "flags");
  if ((flags & ~kFlagEmpty) != 0) throw FormatError("unknown index flags");
  GridParams params;
  try {
    params = GridParams(d, h);
  } catch (const DomainError& e) {
    throw FormatError(std::string("bad grid parameters: ") + e.what());
  }
  const auto stored_count = get_le<std::uint64_t>(in, "point count");
  std::vector<std::uint64_t> counts(h);
  for (auto& c : counts) c = get_le<std::uint32_t>(in, "group count");
  const ChildIndex fanout = params.fanout();
  RankBitVector bits;
  for (unsigned t = 0; t < h; ++t) {
    const std::uint64_t nbits = counts[t] * fanout;
    std::vector<unsigned char> bytes((nbits + 7) / 8);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
      throw FormatError("truncated index: level " + std::to_string(t) + " bits");
    }
    for (std::uint64_t k = 0; k < nbits; k += 8) {
      const unsigned take = static_cast<unsigned>(std::min<std::uint64_t>(8, nbits - k));
      bits.append(bytes[k >> 3], take);
      if (take < 8 && (bytes[k >> 3] >> take) != 0) throw FormatError("nonzero padding bits");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after index");
  CompactQuadtree tree = CompactQuadtree::from_levels(params, std::move(counts), std::move(bits));
  if (tree.is_empty() != ((flags & kFlagEmpty) != 0)) {
    throw FormatError("empty flag disagrees with the group counts");
  }
  const Count actual = count_points(tree);
  if (stored_count != std::numeric_limits<std::uint64_t>::max() && actual != Count(stored_count)) {
    throw FormatError("stored point count does not match the tree");
  }
  return tree;
}

void save_qdx(const std::string& path, const CompactQuadtree& tree) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  write_qdx(out, tree);
}

CompactQuadtree load_qdx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return read_qdx(in);
}

}  // namespace qdag
