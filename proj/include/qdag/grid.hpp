#pragma once

// Grid geometry shared by every layer: grid parameters, Morton paths,
// attribute sets under the global (lexicographic) order, and the child-index
// projection used by Extend and projection.

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qdag {

inline constexpr unsigned kMaxDims = 16;
inline constexpr unsigned kMaxHeight = 63;

using Coord = std::uint64_t;
using Point = std::vector<Coord>;
using ChildIndex = std::uint32_t;

// d dimensions over a grid of side 2^h.
class GridParams {
 public:
  GridParams() = default;
  // Throws DomainError unless 1 <= dims <= kMaxDims and 1 <= height <= kMaxHeight.
  GridParams(unsigned dims, unsigned height);

  unsigned dims() const { return dims_; }
  unsigned height() const { return height_; }
  Coord side() const { return Coord{1} << height_; }
  ChildIndex fanout() const { return ChildIndex{1} << dims_; }

  GridParams with_dims(unsigned dims) const { return GridParams(dims, height_); }

  friend bool operator==(const GridParams&, const GridParams&) = default;

 private:
  unsigned dims_ = 1;
  unsigned height_ = 1;
};

// One child index per level, root first.
using MortonPath = std::vector<ChildIndex>;

class AttributeSet;

// Level t holds bit (h-1-t) of every coordinate; coordinate 0 supplies the
// most significant bit of the child index.
MortonPath morton_encode(std::span<const Coord> point, const GridParams& params,
                         const AttributeSet* names = nullptr);
Point morton_decode(std::span<const ChildIndex> path, const GridParams& params);

// Child index of `point` at depth `depth` (0 = root).
ChildIndex morton_code_at(std::span<const Coord> point, unsigned depth,
                          const GridParams& params);

// Strict Morton order (the order in which a quadtree enumerates cells).
bool morton_less(std::span<const Coord> a, std::span<const Coord> b);

// Sorted, duplicate-free attribute names. The sorted order is the global
// attribute order, so the i-th name owns coordinate i of every tuple.
class AttributeSet {
 public:
  AttributeSet() = default;
  // Sorts the names; duplicates raise SchemaError.
  explicit AttributeSet(std::vector<std::string> names);
  AttributeSet(std::initializer_list<std::string> names)
      : AttributeSet(std::vector<std::string>(names)) {}

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& operator[](std::size_t i) const { return names_[i]; }

  bool contains(const std::string& name) const;
  // Position of `name`, or -1.
  int index_of(const std::string& name) const;
  bool is_subset_of(const AttributeSet& other) const;

  static AttributeSet unite(const AttributeSet& a, const AttributeSet& b);

  // "A,B,C"
  std::string to_string() const;

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;

 private:
  std::vector<std::string> names_;
};

// Positions of a sub-attribute-set inside a superset, as child-index bits.
class AttributeMask {
 public:
  AttributeMask() = default;
  // `positions` are strictly increasing indices into a set of `super_dims`.
  AttributeMask(unsigned super_dims, std::vector<unsigned> positions);

  // Throws SchemaError if `sub` is not contained in `super`.
  static AttributeMask embed(const AttributeSet& sub, const AttributeSet& super);
  static AttributeMask identity(unsigned dims);

  unsigned super_dims() const { return super_dims_; }
  unsigned sub_dims() const { return static_cast<unsigned>(positions_.size()); }
  const std::vector<unsigned>& positions() const { return positions_; }
  // Bit (super_dims-1-p) is set for every selected position p.
  std::uint32_t bits() const { return bits_; }
  bool is_identity() const { return sub_dims() == super_dims_; }

 private:
  unsigned super_dims_ = 0;
  std::vector<unsigned> positions_;
  std::uint32_t bits_ = 0;
};

// Precomputed projection of every child index through one mask. Tables are
// cached process-wide per (super_dims, bits) and immutable once published.
class ProjectionTable {
 public:
  static std::shared_ptr<const ProjectionTable> get(const AttributeMask& mask);

  ChildIndex operator[](ChildIndex i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  const AttributeMask& mask() const { return mask_; }

  explicit ProjectionTable(const AttributeMask& mask);

 private:
  AttributeMask mask_;
  std::vector<ChildIndex> entries_;
};

// Bits of `i` at the mask positions, order preserved.
ChildIndex project_child_index(ChildIndex i, const AttributeMask& mask);

}  // namespace qdag
