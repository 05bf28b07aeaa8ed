#pragma once

// Glue between oracle instances and the engine.

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "qdag/error.hpp"
#include "qdag/lqdag.hpp"
#include "qdag/quadtree.hpp"

namespace qdag::testing {

struct LoadedDatabase {
  unsigned height = 1;
  std::map<std::string, RelationSource> relations;

  RelationResolver resolver() const {
    return [this](const std::string& name) {
      const auto it = relations.find(name);
      if (it == relations.end()) throw SchemaError("unknown relation '" + name + "'");
      return it->second;
    };
  }
};

inline LoadedDatabase load(const std::vector<oracle::RelationData>& data, unsigned height) {
  LoadedDatabase db;
  db.height = height;
  for (const auto& r : data) {
    std::vector<Point> points(r.tuples.begin(), r.tuples.end());
    const GridParams params(static_cast<unsigned>(r.attributes.size()), height);
    db.relations[r.name] = RelationSource{
        r.name, std::make_shared<const CompactQuadtree>(build_quadtree(points, params)),
        r.attributes};
  }
  return db;
}

// Cells of a tree in lexicographic order.
inline std::vector<oracle::Tuple> sorted_tuples(const CompactQuadtree& tree) {
  std::vector<Point> pts = enumerate(tree);
  std::sort(pts.begin(), pts.end());
  return pts;
}

inline std::vector<Point> points_of(const std::vector<oracle::Tuple>& tuples) {
  return {tuples.begin(), tuples.end()};
}

inline unsigned height_for_side(std::uint64_t side) {
  unsigned h = 0;
  while ((std::uint64_t{1} << h) < side) ++h;
  return std::max(h, 1u);
}

// The 12 tuples of the running 16x16 example relation R(A,B).
inline std::vector<Point> example_relation() {
  return {{4, 3},  {7, 2},  {5, 6},  {6, 4},  {3, 12}, {6, 12},
          {6, 13}, {7, 12}, {7, 13}, {8, 5},  {14, 1}, {15, 0}};
}

// S(B,C) of the extension example on an 8x8 grid.
inline std::vector<Point> example_extension_relation() {
  return {{3, 4}, {6, 4}, {6, 5}, {7, 4}, {7, 5}};
}

}  // namespace qdag::testing
