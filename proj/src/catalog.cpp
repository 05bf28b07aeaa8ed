#include "qdag/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "qdag/error.hpp"

namespace qdag {

namespace {

constexpr const char* kManifest = "catalog.txt";
constexpr const char* kDictionary = "dictionary.txt";
constexpr const char* kMagic = "qdag-catalog 1";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Sign and digits without leading zeros, or nullopt for non-integers.
std::optional<std::pair<bool, std::string_view>> integer_parts(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
  if (s == "0") negative = false;
  return std::make_pair(negative, s);
}

// -1, 0, 1 comparing magnitudes given as digit strings without leading zeros.
int compare_magnitude(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  const int c = a.compare(b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

Coord parse_raw(std::string_view token, std::size_t line, std::size_t column) {
  Coord v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  const std::string where = " (line " + std::to_string(line) + ", column " +
                            std::to_string(column) + ")";
  if (token.empty() || ptr != token.data() + token.size()) {
    throw DomainError("'" + std::string(token) + "' is not a non-negative integer" + where);
  }
  if (ec == std::errc::result_out_of_range || v >= (Coord{1} << kMaxHeight)) {
    throw DomainError("value " + std::string(token) + " overflows the grid" + where);
  }
  return v;
}

bool is_keyword(std::string_view name) {
  std::string upper;
  for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return upper == "NOT" || upper == "AND" || upper == "OR" || upper == "JOIN" ||
         upper == "DIFF" || upper == "PROJECT";
}

void check_name(const std::string& name, const char* what) {
  if (!is_identifier(name) || is_keyword(name)) {
    throw SchemaError(std::string("invalid ") + what + " name '" + name + "'");
  }
}

unsigned bits_for_values(Coord max_value) {
  unsigned h = 1;
  while (h < kMaxHeight && (max_value >> h) != 0) ++h;
  return h;
}

unsigned bits_for_ids(std::size_t n) {
  unsigned h = 1;
  while (h < kMaxHeight && (std::uint64_t{1} << h) < n) ++h;
  return h;
}

const char* mode_name(EncodingMode m) { return m == EncodingMode::kRaw ? "raw" : "dict"; }

}  // namespace

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool dictionary_less(std::string_view a, std::string_view b) {
  const auto ia = integer_parts(a);
  const auto ib = integer_parts(b);
  if (ia && ib) {
    int c = 0;
    if (ia->first != ib->first) {
      c = ia->first ? -1 : 1;
    } else {
      c = compare_magnitude(ia->second, ib->second);
      if (ia->first) c = -c;
    }
    if (c != 0) return c < 0;
    return a < b;
  }
  if (ia != ib && (ia || ib)) return ia.has_value();
  return a < b;
}

ValueDictionary ValueDictionary::from_tokens(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end(),
            [](const std::string& a, const std::string& b) { return dictionary_less(a, b); });
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  ValueDictionary d;
  d.values_ = std::move(tokens);
  for (Coord i = 0; i < d.values_.size(); ++i) d.ids_.emplace(d.values_[i], i);
  return d;
}

std::optional<Coord> ValueDictionary::id_of(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& ValueDictionary::value_of(Coord id) const {
  if (id >= values_.size()) throw DomainError("id " + std::to_string(id) + " is not in the dictionary");
  return values_[id];
}

std::vector<std::string> Catalog::relation_names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : relations_) out.push_back(name);
  return out;
}

const RelationMeta& Catalog::meta(const std::string& name) const {
  const auto it = relations_.find(name);
  if (it == relations_.end()) throw SchemaError("unknown relation '" + name + "'");
  return it->second.meta;
}

std::shared_ptr<const CompactQuadtree> Catalog::tree(const std::string& name) const {
  const auto it = relations_.find(name);
  if (it == relations_.end()) throw SchemaError("unknown relation '" + name + "'");
  return it->second.tree;
}

void Catalog::attach(const std::string& name, const AttributeSet& attributes,
                     std::shared_ptr<const CompactQuadtree> tree) {
  check_name(name, "relation");
  if (contains(name)) throw SchemaError("relation '" + name + "' already exists");
  if (!attributes.is_subset_of(attributes_)) {
    throw SchemaError("attributes {" + attributes.to_string() +
                      "} are not all known to the catalog {" + attributes_.to_string() + "}");
  }
  if (tree->params().dims() != attributes.size()) {
    throw SchemaError("index of '" + name + "' has " + std::to_string(tree->params().dims()) +
                      " dimensions, expected " + std::to_string(attributes.size()));
  }
  if (tree->params().height() != height_) {
    throw SchemaError("index of '" + name + "' has height " +
                      std::to_string(tree->params().height()) + ", catalog uses " +
                      std::to_string(height_));
  }
  Entry e;
  e.meta.name = name;
  e.meta.attributes = attributes;
  const Count n = count_points(*tree);
  e.meta.tuple_count = n > std::numeric_limits<std::uint64_t>::max()
                           ? std::numeric_limits<std::uint64_t>::max()
                           : static_cast<std::uint64_t>(n);
  e.meta.mode = mode_;
  e.tree = std::move(tree);
  relations_.emplace(name, std::move(e));
}

std::string Catalog::decode(Coord value) const {
  if (mode_ == EncodingMode::kRaw) return std::to_string(value);
  if (value < dictionary_.size()) return dictionary_.value_of(value);
  return "#" + std::to_string(value);
}

void Catalog::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / kManifest, std::ios::binary | std::ios::trunc);
  if (!manifest) throw FormatError("cannot write " + (dir / kManifest).string());
  manifest << kMagic << '\n';
  manifest << "height " << height_ << '\n';
  manifest << "mode " << mode_name(mode_) << '\n';
  manifest << "attributes " << attributes_.to_string() << '\n';
  for (const auto& [name, e] : relations_) {
    manifest << "relation " << name << ' ' << e.meta.attributes.to_string() << ' '
             << e.meta.tuple_count << ' ' << e.meta.index_file << '\n';
    save_qdx((dir / e.meta.index_file).string(), *e.tree);
  }
  if (!manifest) throw FormatError("cannot write " + (dir / kManifest).string());
  if (mode_ == EncodingMode::kDictionary) {
    std::ofstream dict(dir / kDictionary, std::ios::binary | std::ios::trunc);
    for (const auto& token : dictionary_.values()) dict << token << '\n';
    if (!dict) throw FormatError("cannot write " + (dir / kDictionary).string());
  }
}

Catalog Catalog::load(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / kManifest, std::ios::binary);
  if (!manifest) throw FormatError("no catalog at " + dir.string());
  Catalog c;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& message) -> void {
    throw FormatError((dir / kManifest).string() + ":" + std::to_string(line_no) + ": " + message);
  };
  bool seen_height = false, seen_mode = false, seen_attributes = false;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kMagic) fail("not a catalog manifest");
      continue;
    }
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    std::vector<std::string> rest;
    for (std::string f; fields >> f;) rest.push_back(f);
    if (key == "height" && rest.size() == 1) {
      unsigned h = 0;
      const auto [p, ec] = std::from_chars(rest[0].data(), rest[0].data() + rest[0].size(), h);
      if (ec != std::errc() || p != rest[0].data() + rest[0].size() || h < 1 || h > kMaxHeight) {
        fail("bad height");
      }
      c.height_ = h;
      seen_height = true;
    } else if (key == "mode" && rest.size() == 1) {
      if (rest[0] == "raw") {
        c.mode_ = EncodingMode::kRaw;
      } else if (rest[0] == "dict") {
        c.mode_ = EncodingMode::kDictionary;
      } else {
        fail("bad mode '" + rest[0] + "'");
      }
      seen_mode = true;
    } else if (key == "attributes" && rest.size() <= 1) {
      try {
        c.attributes_ = rest.empty() ? AttributeSet() : AttributeSet(split(rest[0], ','));
      } catch (const SchemaError& e) {
        fail(e.what());
      }
      seen_attributes = true;
    } else if (key == "relation" && rest.size() == 4) {
      if (!seen_height || !seen_mode || !seen_attributes) fail("relation before header");
      Entry e;
      e.meta.name = rest[0];
      e.meta.mode = c.mode_;
      e.meta.index_file = rest[3];
      try {
        check_name(e.meta.name, "relation");
        e.meta.attributes = AttributeSet(split(rest[1], ','));
      } catch (const SchemaError& err) {
        fail(err.what());
      }
      if (!e.meta.attributes.is_subset_of(c.attributes_)) fail("relation uses unknown attributes");
      const auto [p, ec] =
          std::from_chars(rest[2].data(), rest[2].data() + rest[2].size(), e.meta.tuple_count);
      if (ec != std::errc() || p != rest[2].data() + rest[2].size()) fail("bad tuple count");
      if (e.meta.index_file.find('/') != std::string::npos) fail("index file outside catalog");
      auto tree = std::make_shared<CompactQuadtree>(load_qdx((dir / e.meta.index_file).string()));
      if (tree->params().dims() != e.meta.attributes.size() ||
          tree->params().height() != c.height_) {
        fail("index of '" + e.meta.name + "' does not match the manifest");
      }
      if (count_points(*tree) != Count(e.meta.tuple_count)) {
        fail("index of '" + e.meta.name + "' holds a different number of tuples");
      }
      e.tree = std::move(tree);
      const std::string name = e.meta.name;
      if (!c.relations_.emplace(name, std::move(e)).second) fail("duplicate relation '" + name + "'");
    } else {
      fail("unrecognized line '" + line + "'");
    }
  }
  if (line_no == 0) throw FormatError((dir / kManifest).string() + ": empty manifest");
  if (!seen_height || !seen_mode || !seen_attributes) {
    throw FormatError((dir / kManifest).string() + ": incomplete header");
  }
  if (c.mode_ == EncodingMode::kDictionary) {
    std::ifstream dict(dir / kDictionary, std::ios::binary);
    if (!dict) throw FormatError("missing " + (dir / kDictionary).string());
    std::vector<std::string> tokens;
    for (std::string t; std::getline(dict, t);) {
      if (!t.empty() && t.back() == '\r') t.pop_back();
      tokens.push_back(t);
    }
    ValueDictionary d = ValueDictionary::from_tokens(tokens);
    if (d.values() != tokens) throw FormatError("dictionary is not sorted or has duplicates");
    c.dictionary_ = std::move(d);
  }
  return c;
}

RelationMeta CatalogBuilder::ingest(std::istream& in, const std::string& name,
                                    const std::vector<std::string>& columns,
                                    const IngestOptions& options) {
  check_name(name, "relation");
  for (const auto& s : staged_) {
    if (s.meta.name == name) throw SchemaError("relation '" + name + "' already staged");
  }
  if (columns.empty()) throw SchemaError("relation '" + name + "' has no attributes");
  if (columns.size() > kMaxDims) throw SchemaError("relation '" + name + "' has more than 16 attributes");
  for (const auto& c : columns) check_name(c, "attribute");
  const EncodingMode mode = options.dictionary ? EncodingMode::kDictionary : EncodingMode::kRaw;
  if (mode_ && *mode_ != mode) {
    throw SchemaError("relation '" + name + "' uses " + mode_name(mode) +
                      " encoding but the catalog uses " + mode_name(*mode_));
  }

  Staged s;
  s.meta.name = name;
  s.meta.attributes = AttributeSet(columns);
  s.meta.mode = mode;
  s.meta.index_file = name + ".qdx";
  for (const auto& attr : s.meta.attributes.names()) {
    s.order.push_back(static_cast<unsigned>(
        std::find(columns.begin(), columns.end(), attr) - columns.begin()));
  }

  std::string line;
  std::size_t line_no = 0;
  bool skipped_header = !options.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    std::vector<std::string> fields = split(line, options.delimiter);
    if (fields.size() != columns.size()) {
      throw FormatError(name + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(columns.size()));
    }
    if (mode == EncodingMode::kRaw) {
      Point p(fields.size());
      for (std::size_t j = 0; j < fields.size(); ++j) p[j] = parse_raw(fields[j], line_no, j + 1);
      s.values.push_back(std::move(p));
    } else {
      s.rows.push_back(std::move(fields));
    }
  }
  if (in.bad()) throw FormatError(name + ": read error");

  std::sort(s.values.begin(), s.values.end());
  s.values.erase(std::unique(s.values.begin(), s.values.end()), s.values.end());
  std::sort(s.rows.begin(), s.rows.end());
  s.rows.erase(std::unique(s.rows.begin(), s.rows.end()), s.rows.end());
  s.meta.tuple_count = mode == EncodingMode::kRaw ? s.values.size() : s.rows.size();

  mode_ = mode;
  staged_.push_back(std::move(s));
  return staged_.back().meta;
}

RelationMeta CatalogBuilder::ingest_file(const std::filesystem::path& path, const std::string& name,
                                         const std::vector<std::string>& columns,
                                         const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return ingest(in, name, columns, options);
}

Catalog CatalogBuilder::build() const {
  Catalog c;
  c.mode_ = mode_.value_or(EncodingMode::kRaw);
  for (const auto& s : staged_) c.attributes_ = AttributeSet::unite(c.attributes_, s.meta.attributes);

  if (c.mode_ == EncodingMode::kRaw) {
    Coord max_value = 0;
    for (const auto& s : staged_) {
      for (const auto& p : s.values) max_value = std::max(max_value, *std::max_element(p.begin(), p.end()));
    }
    c.height_ = bits_for_values(max_value);
  } else {
    std::vector<std::string> tokens;
    for (const auto& s : staged_) {
      for (const auto& row : s.rows) tokens.insert(tokens.end(), row.begin(), row.end());
    }
    c.dictionary_ = ValueDictionary::from_tokens(std::move(tokens));
    c.height_ = bits_for_ids(c.dictionary_.size());
  }

  for (const auto& s : staged_) {
    const GridParams params(static_cast<unsigned>(s.meta.attributes.size()), c.height_);
    std::vector<Point> points;
    const std::size_t n = c.mode_ == EncodingMode::kRaw ? s.values.size() : s.rows.size();
    points.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      Point p(s.order.size());
      for (std::size_t k = 0; k < s.order.size(); ++k) {
        p[k] = c.mode_ == EncodingMode::kRaw ? s.values[r][s.order[k]]
                                             : *c.dictionary_.id_of(s.rows[r][s.order[k]]);
      }
      points.push_back(std::move(p));
    }
    Catalog::Entry e;
    e.meta = s.meta;
    e.tree = std::make_shared<const CompactQuadtree>(
        build_quadtree(std::move(points), params, &s.meta.attributes));
    c.relations_.emplace(s.meta.name, std::move(e));
  }
  return c;
}

}  // namespace qdag
