#include "qdag/grid.hpp"

#include <algorithm>
#include <bit>
#include <iterator>
#include <map>
#include <mutex>
#include <utility>

#include "qdag/error.hpp"

namespace qdag {

GridParams::GridParams(unsigned dims, unsigned height) : dims_(dims), height_(height) {
  if (dims < 1 || dims > kMaxDims) {
    throw DomainError("dimension count " + std::to_string(dims) + " outside [1, " +
                      std::to_string(kMaxDims) + "]");
  }
  if (height < 1 || height > kMaxHeight) {
    throw DomainError("tree height " + std::to_string(height) + " outside [1, " +
                      std::to_string(kMaxHeight) + "]");
  }
}

MortonPath morton_encode(std::span<const Coord> point, const GridParams& params,
                         const AttributeSet* names) {
  const unsigned d = params.dims();
  const unsigned h = params.height();
  if (point.size() != d) {
    throw DomainError("point has " + std::to_string(point.size()) +
                      " coordinates, grid has " + std::to_string(d));
  }
  for (unsigned j = 0; j < d; ++j) {
    if (point[j] >= params.side()) {
      std::string attr = (names != nullptr && j < names->size())
                             ? (*names)[j]
                             : "#" + std::to_string(j);
      throw DomainError("value " + std::to_string(point[j]) + " of attribute " + attr +
                        " does not fit a grid of side " + std::to_string(params.side()));
    }
  }
  MortonPath path(h);
  for (unsigned t = 0; t < h; ++t) path[t] = morton_code_at(point, t, params);
  return path;
}

Point morton_decode(std::span<const ChildIndex> path, const GridParams& params) {
  const unsigned d = params.dims();
  const unsigned h = params.height();
  if (path.size() != h) {
    throw DomainError("Morton path has " + std::to_string(path.size()) +
                      " levels, grid has " + std::to_string(h));
  }
  Point point(d, 0);
  for (unsigned t = 0; t < h; ++t) {
    for (unsigned j = 0; j < d; ++j) {
      const Coord bit = (path[t] >> (d - 1 - j)) & 1u;
      point[j] |= bit << (h - 1 - t);
    }
  }
  return point;
}

ChildIndex morton_code_at(std::span<const Coord> point, unsigned depth,
                          const GridParams& params) {
  const unsigned d = params.dims();
  const unsigned shift = params.height() - 1 - depth;
  ChildIndex code = 0;
  for (unsigned j = 0; j < d; ++j) {
    code = (code << 1) | static_cast<ChildIndex>((point[j] >> shift) & 1u);
  }
  return code;
}

bool morton_less(std::span<const Coord> a, std::span<const Coord> b) {
  // The most significant differing bit decides; on equal bit levels the
  // earlier attribute wins because it is more significant in the child index.
  std::size_t best = a.size();
  int best_msb = -1;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const Coord x = a[j] ^ b[j];
    if (x == 0) continue;
    const int msb = 63 - std::countl_zero(x);
    if (msb > best_msb) {
      best_msb = msb;
      best = j;
    }
  }
  if (best == a.size()) return false;
  return a[best] < b[best];
}

AttributeSet::AttributeSet(std::vector<std::string> names) : names_(std::move(names)) {
  std::sort(names_.begin(), names_.end());
  auto dup = std::adjacent_find(names_.begin(), names_.end());
  if (dup != names_.end()) throw SchemaError("duplicate attribute '" + *dup + "'");
}

bool AttributeSet::contains(const std::string& name) const { return index_of(name) >= 0; }

int AttributeSet::index_of(const std::string& name) const {
  auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it == names_.end() || *it != name) return -1;
  return static_cast<int>(it - names_.begin());
}

bool AttributeSet::is_subset_of(const AttributeSet& other) const {
  return std::includes(other.names_.begin(), other.names_.end(), names_.begin(),
                       names_.end());
}

AttributeSet AttributeSet::unite(const AttributeSet& a, const AttributeSet& b) {
  AttributeSet out;
  std::set_union(a.names_.begin(), a.names_.end(), b.names_.begin(), b.names_.end(),
                 std::back_inserter(out.names_));
  return out;
}

std::string AttributeSet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (i > 0) out += ',';
    out += names_[i];
  }
  return out;
}

AttributeMask::AttributeMask(unsigned super_dims, std::vector<unsigned> positions)
    : super_dims_(super_dims), positions_(std::move(positions)) {
  if (super_dims_ > kMaxDims) throw SchemaError("mask wider than the dimension cap");
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    if (positions_[k] >= super_dims_ || (k > 0 && positions_[k] <= positions_[k - 1])) {
      throw SchemaError("mask positions must be strictly increasing and in range");
    }
    bits_ |= std::uint32_t{1} << (super_dims_ - 1 - positions_[k]);
  }
}

AttributeMask AttributeMask::embed(const AttributeSet& sub, const AttributeSet& super) {
  std::vector<unsigned> positions;
  positions.reserve(sub.size());
  for (const auto& name : sub.names()) {
    const int p = super.index_of(name);
    if (p < 0) {
      throw SchemaError("attribute '" + name + "' is missing from {" + super.to_string() +
                        "}");
    }
    positions.push_back(static_cast<unsigned>(p));
  }
  return AttributeMask(static_cast<unsigned>(super.size()), std::move(positions));
}

AttributeMask AttributeMask::identity(unsigned dims) {
  std::vector<unsigned> positions(dims);
  for (unsigned p = 0; p < dims; ++p) positions[p] = p;
  return AttributeMask(dims, std::move(positions));
}

ProjectionTable::ProjectionTable(const AttributeMask& mask)
    : mask_(mask), entries_(std::size_t{1} << mask.super_dims()) {
  const unsigned d = mask.super_dims();
  for (ChildIndex i = 0; i < entries_.size(); ++i) {
    ChildIndex out = 0;
    for (unsigned p : mask.positions()) out = (out << 1) | ((i >> (d - 1 - p)) & 1u);
    entries_[i] = out;
  }
}

std::shared_ptr<const ProjectionTable> ProjectionTable::get(const AttributeMask& mask) {
  static std::mutex mutex;
  static std::map<std::pair<unsigned, std::uint32_t>, std::shared_ptr<const ProjectionTable>>
      cache;
  const auto key = std::make_pair(mask.super_dims(), mask.bits());
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto table = std::make_shared<const ProjectionTable>(mask);
  cache.emplace(key, table);
  return table;
}

ChildIndex project_child_index(ChildIndex i, const AttributeMask& mask) {
  return (*ProjectionTable::get(mask))[i];
}

}  // namespace qdag
