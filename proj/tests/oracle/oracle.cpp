#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <boost/rational.hpp>

namespace qdag::oracle {

DenseRelation::DenseRelation(AttributeSet attributes, std::uint64_t side)
    : attributes_(std::move(attributes)), side_(side) {
  std::uint64_t cells = 1;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (cells > kMaxCells / side) throw std::length_error("oracle grid too large");
    cells *= side;
  }
  bits_.assign(cells, false);
}

DenseRelation DenseRelation::from_tuples(AttributeSet attributes, std::uint64_t side,
                                         const std::vector<Tuple>& tuples) {
  DenseRelation r(std::move(attributes), side);
  for (const auto& t : tuples) r.insert(t);
  return r;
}

std::uint64_t DenseRelation::size() const {
  return static_cast<std::uint64_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<Tuple> DenseRelation::tuples() const {
  std::vector<Tuple> out;
  for (std::uint64_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(decode(i));
  }
  return out;
}

Tuple DenseRelation::decode(std::uint64_t index) const {
  Tuple t(attributes_.size());
  for (std::size_t j = attributes_.size(); j-- > 0;) {
    t[j] = index % side_;
    index /= side_;
  }
  return t;
}

std::uint64_t DenseRelation::index(const Tuple& t) const {
  if (t.size() != attributes_.size()) throw std::invalid_argument("tuple arity mismatch");
  std::uint64_t i = 0;
  for (auto v : t) {
    if (v >= side_) throw std::out_of_range("tuple value outside the grid");
    i = i * side_ + v;
  }
  return i;
}

namespace {

std::vector<std::size_t> positions_in(const AttributeSet& sub, const AttributeSet& super) {
  std::vector<std::size_t> pos;
  for (const auto& name : sub.names()) {
    const int k = super.index_of(name);
    if (k < 0) throw std::invalid_argument("attribute " + name + " missing");
    pos.push_back(static_cast<std::size_t>(k));
  }
  return pos;
}

Tuple restrict(const Tuple& t, const std::vector<std::size_t>& pos) {
  Tuple out(pos.size());
  for (std::size_t k = 0; k < pos.size(); ++k) out[k] = t[pos[k]];
  return out;
}

void require_same(const DenseRelation& a, const DenseRelation& b) {
  if (!(a.attributes() == b.attributes())) throw std::invalid_argument("attribute sets differ");
}

}  // namespace

DenseRelation eval_bruteforce(const QueryAst& ast, const Database& db, std::uint64_t side) {
  using K = QueryAst::Kind;
  switch (ast.kind) {
    case K::kRelation: {
      const auto it = db.find(ast.name);
      if (it == db.end()) throw std::invalid_argument("unknown relation " + ast.name);
      return it->second;
    }
    case K::kNot: {
      DenseRelation r = eval_bruteforce(ast.children.at(0), db, side);
      for (std::uint64_t i = 0; i < r.cells(); ++i) r.set(i, !r.get(i));
      return r;
    }
    case K::kAnd:
    case K::kOr:
    case K::kDiff: {
      DenseRelation acc = eval_bruteforce(ast.children.at(0), db, side);
      for (std::size_t k = 1; k < ast.children.size(); ++k) {
        const DenseRelation next = eval_bruteforce(ast.children[k], db, side);
        require_same(acc, next);
        for (std::uint64_t i = 0; i < acc.cells(); ++i) {
          const bool a = acc.get(i), b = next.get(i);
          acc.set(i, ast.kind == K::kAnd ? (a && b) : ast.kind == K::kOr ? (a || b) : (a && !b));
        }
      }
      return acc;
    }
    case K::kJoin: {
      std::vector<DenseRelation> parts;
      AttributeSet all;
      for (const auto& c : ast.children) {
        parts.push_back(eval_bruteforce(c, db, side));
        all = AttributeSet::unite(all, parts.back().attributes());
      }
      std::vector<std::vector<std::size_t>> pos;
      for (const auto& p : parts) pos.push_back(positions_in(p.attributes(), all));
      DenseRelation out(all, side);
      for (std::uint64_t i = 0; i < out.cells(); ++i) {
        const Tuple t = out.decode(i);
        bool keep = true;
        for (std::size_t k = 0; k < parts.size() && keep; ++k) {
          keep = parts[k].contains(restrict(t, pos[k]));
        }
        out.set(i, keep);
      }
      return out;
    }
    case K::kProject: {
      const DenseRelation in = eval_bruteforce(ast.children.at(0), db, side);
      const AttributeSet target(ast.attributes);
      const auto pos = positions_in(target, in.attributes());
      DenseRelation out(target, side);
      for (std::uint64_t i = 0; i < in.cells(); ++i) {
        if (in.get(i)) out.insert(restrict(in.decode(i), pos));
      }
      return out;
    }
  }
  throw std::logic_error("unknown query kind");
}

namespace {

using Rational = boost::rational<long long>;

// Solves A x = b in place by Gauss-Jordan elimination; false if singular.
bool solve(std::vector<std::vector<Rational>> a, std::vector<Rational> b, std::vector<Rational>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col].numerator() == 0) ++pivot;
    if (pivot == n) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col].numerator() == 0) continue;
      const Rational f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

}  // namespace

std::vector<double> agm_cover(const std::vector<AttributeSet>& edges,
                              const std::vector<std::uint64_t>& sizes) {
  if (edges.size() != sizes.size()) throw std::invalid_argument("one size per relation");
  AttributeSet all;
  for (const auto& e : edges) all = AttributeSet::unite(all, e);
  const std::size_t m = edges.size();
  // Rows: one covering constraint per attribute, then x_e >= 0.
  std::vector<std::vector<Rational>> rows;
  std::vector<Rational> rhs;
  for (const auto& v : all.names()) {
    std::vector<Rational> row(m, Rational(0));
    for (std::size_t e = 0; e < m; ++e) {
      if (edges[e].contains(v)) row[e] = 1;
    }
    rows.push_back(row);
    rhs.push_back(1);
  }
  for (std::size_t e = 0; e < m; ++e) {
    std::vector<Rational> row(m, Rational(0));
    row[e] = 1;
    rows.push_back(row);
    rhs.push_back(0);
  }
  std::vector<double> weight(m);
  for (std::size_t e = 0; e < m; ++e) weight[e] = std::log2(static_cast<double>(sizes[e]));

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x;
  std::vector<bool> choose(rows.size(), false);
  std::fill(choose.begin(), choose.begin() + static_cast<std::ptrdiff_t>(m), true);
  do {
    std::vector<std::vector<Rational>> a;
    std::vector<Rational> b;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (choose[r]) {
        a.push_back(rows[r]);
        b.push_back(rhs[r]);
      }
    }
    std::vector<Rational> x;
    if (!solve(a, b, x)) continue;
    bool feasible = true;
    for (std::size_t r = 0; r < rows.size() && feasible; ++r) {
      Rational lhs = 0;
      for (std::size_t e = 0; e < m; ++e) lhs += rows[r][e] * x[e];
      feasible = lhs >= rhs[r];
    }
    if (!feasible) continue;
    double objective = 0;
    std::vector<double> xd(m);
    for (std::size_t e = 0; e < m; ++e) {
      xd[e] = boost::rational_cast<double>(x[e]);
      objective += xd[e] * weight[e];
    }
    if (objective < best) {
      best = objective;
      best_x = xd;
    }
  } while (std::prev_permutation(choose.begin(), choose.end()));
  if (best_x.empty()) throw std::invalid_argument("edge cover LP is infeasible");
  return best_x;
}

double agm_bound(const std::vector<AttributeSet>& edges, const std::vector<std::uint64_t>& sizes) {
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) return 0;
  const std::vector<double> x = agm_cover(edges, sizes);
  double exponent = 0;
  for (std::size_t e = 0; e < x.size(); ++e) exponent += x[e] * std::log2(double(sizes[e]));
  return std::exp2(exponent);
}

std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("draw_below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = 0;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

std::vector<RelationData> gen_instance(std::uint64_t seed, const std::vector<Schema>& schemas,
                                       const GenOptions& options) {
  std::mt19937_64 rng(seed);
  std::vector<RelationData> out;
  for (const auto& s : schemas) {
    RelationData r;
    r.name = s.name;
    r.attributes = AttributeSet(s.attributes);
    const std::size_t d = r.attributes.size();
    std::uint64_t capacity = 1;
    for (std::size_t j = 0; j < d && capacity <= options.max_tuples; ++j) capacity *= options.side;
    const std::size_t hi = std::min<std::uint64_t>(options.max_tuples, capacity);
    const std::size_t lo = std::min(options.min_tuples, hi);
    const std::size_t target = lo + draw_below(rng, hi - lo + 1);

    std::vector<Tuple> centers;
    const std::uint64_t width = std::clamp<std::uint64_t>(options.width, 1, options.side);
    if (options.profile == Profile::kClustered) {
      for (std::size_t c = 0; c < std::max<std::size_t>(options.clusters, 1); ++c) {
        Tuple center(d);
        for (auto& v : center) v = draw_below(rng, options.side - width + 1);
        centers.push_back(center);
      }
    }
    std::set<Tuple> seen;
    for (std::size_t attempt = 0; seen.size() < target && attempt < 64 * (target + 1); ++attempt) {
      Tuple t(d);
      if (options.profile == Profile::kUniform) {
        for (auto& v : t) v = draw_below(rng, options.side);
      } else {
        const Tuple& c = centers[draw_below(rng, centers.size())];
        for (std::size_t j = 0; j < d; ++j) t[j] = c[j] + draw_below(rng, width);
      }
      seen.insert(t);
    }
    r.tuples.assign(seen.begin(), seen.end());
    out.push_back(std::move(r));
  }
  return out;
}

Database to_database(const std::vector<RelationData>& relations, std::uint64_t side) {
  Database db;
  for (const auto& r : relations) {
    db.emplace(r.name, DenseRelation::from_tuples(r.attributes, side, r.tuples));
  }
  return db;
}

namespace {

const std::vector<std::string> kPool = {"A", "B", "C", "D"};

std::vector<std::string> random_subset(std::mt19937_64& rng, const std::vector<std::string>& from,
                                       std::size_t min_size, std::size_t max_size) {
  while (true) {
    std::vector<std::string> out;
    for (const auto& a : from) {
      if (draw_below(rng, 2)) out.push_back(a);
    }
    if (out.size() >= min_size && out.size() <= max_size) return out;
  }
}

QueryAst leaf(const std::vector<std::string>& attrs, std::vector<Schema>& schemas) {
  const std::string name = "R" + std::to_string(schemas.size());
  schemas.push_back({name, attrs});
  return QueryAst::relation(name);
}

QueryAst gen(std::mt19937_64& rng, const std::vector<std::string>& target, unsigned depth,
             std::vector<Schema>& schemas) {
  if (depth == 0 || draw_below(rng, 10) < 2) return leaf(target, schemas);
  switch (draw_below(rng, 6)) {
    case 0: return QueryAst::negate(gen(rng, target, depth - 1, schemas));
    case 1: {
      QueryAst a = gen(rng, target, depth - 1, schemas);
      QueryAst b = gen(rng, target, depth - 1, schemas);
      return QueryAst::conjunction({std::move(a), std::move(b)});
    }
    case 2: {
      QueryAst a = gen(rng, target, depth - 1, schemas);
      QueryAst b = gen(rng, target, depth - 1, schemas);
      return QueryAst::disjunction(std::move(a), std::move(b));
    }
    case 3: {
      QueryAst a = gen(rng, target, depth - 1, schemas);
      QueryAst b = gen(rng, target, depth - 1, schemas);
      return QueryAst::difference(std::move(a), std::move(b));
    }
    case 4: {
      // Split the target into two covering, non-empty attribute sets.
      std::vector<std::string> x, y;
      while (x.empty() || y.empty()) {
        x.clear();
        y.clear();
        for (const auto& a : target) {
          const auto side = draw_below(rng, 3);
          if (side != 1) x.push_back(a);
          if (side != 0) y.push_back(a);
        }
      }
      QueryAst a = gen(rng, x, depth - 1, schemas);
      QueryAst b = gen(rng, y, depth - 1, schemas);
      return QueryAst::join({std::move(a), std::move(b)});
    }
    default: {
      std::vector<std::string> rest;
      for (const auto& a : kPool) {
        if (std::find(target.begin(), target.end(), a) == target.end()) rest.push_back(a);
      }
      if (rest.empty()) return leaf(target, schemas);
      std::vector<std::string> wider = target;
      for (const auto& a : random_subset(rng, rest, 1, rest.size())) wider.push_back(a);
      std::sort(wider.begin(), wider.end());
      return QueryAst::project(target, gen(rng, wider, depth - 1, schemas));
    }
  }
}

}  // namespace

std::vector<Schema> random_join_schemas(std::mt19937_64& rng, std::size_t relations,
                                        std::size_t max_dims) {
  const std::vector<std::string> pool(kPool.begin(),
                                      kPool.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(max_dims, 4)));
  std::vector<Schema> out;
  for (std::size_t k = 0; k < relations; ++k) {
    out.push_back({"R" + std::to_string(k), random_subset(rng, pool, 1, pool.size())});
  }
  return out;
}

QueryAst random_formula(std::mt19937_64& rng, unsigned max_depth, std::vector<Schema>& schemas) {
  const auto target = random_subset(rng, kPool, 1, 3);
  return gen(rng, target, max_depth, schemas);
}

}  // namespace qdag::oracle
