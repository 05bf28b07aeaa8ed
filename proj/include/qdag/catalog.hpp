#pragma once

// A directory of relations sharing one grid height and one encoding.
//
//   catalog.txt      manifest (height, mode, attributes, relations)
//   dictionary.txt   one token per line in id order (dictionary mode only)
//   <relation>.qdx   QDX1 index per relation

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdag/grid.hpp"
#include "qdag/quadtree.hpp"

namespace qdag {

enum class EncodingMode : std::uint8_t { kRaw, kDictionary };

// Ordering of dictionary tokens: integers numerically and before anything
// else, remaining tokens byte-wise.
bool dictionary_less(std::string_view a, std::string_view b);

class ValueDictionary {
 public:
  ValueDictionary() = default;
  // Sorts with dictionary_less and drops duplicates.
  static ValueDictionary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return values_.size(); }
  std::optional<Coord> id_of(std::string_view token) const;
  // Throws DomainError for ids past the end.
  const std::string& value_of(Coord id) const;
  const std::vector<std::string>& values() const { return values_; }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, Coord> ids_;
};

struct RelationMeta {
  std::string name;
  AttributeSet attributes;
  std::uint64_t tuple_count = 0;  // distinct tuples
  EncodingMode mode = EncodingMode::kRaw;
  std::string index_file;
};

struct IngestOptions {
  char delimiter = ',';
  bool header = false;
  bool dictionary = false;
};

class Catalog {
 public:
  Catalog() = default;

  unsigned height() const { return height_; }
  EncodingMode mode() const { return mode_; }
  // Every attribute of every relation, in global order.
  const AttributeSet& attributes() const { return attributes_; }
  const ValueDictionary& dictionary() const { return dictionary_; }

  std::vector<std::string> relation_names() const;
  bool contains(const std::string& name) const { return relations_.count(name) != 0; }
  // Both throw SchemaError for unknown relations.
  const RelationMeta& meta(const std::string& name) const;
  std::shared_ptr<const CompactQuadtree> tree(const std::string& name) const;

  // Mounts an existing index under `name` for querying. Its attributes must
  // already be known to the catalog and its height must match.
  void attach(const std::string& name, const AttributeSet& attributes,
              std::shared_ptr<const CompactQuadtree> tree);

  // Printable form of a coordinate: the number itself in raw mode, the
  // token in dictionary mode, "#id" for ids outside the dictionary.
  std::string decode(Coord value) const;

  void save(const std::filesystem::path& dir) const;
  // Throws FormatError for malformed or inconsistent files.
  static Catalog load(const std::filesystem::path& dir);

 private:
  friend class CatalogBuilder;

  struct Entry {
    RelationMeta meta;
    std::shared_ptr<const CompactQuadtree> tree;
  };

  unsigned height_ = 1;
  EncodingMode mode_ = EncodingMode::kRaw;
  AttributeSet attributes_;
  ValueDictionary dictionary_;
  std::map<std::string, Entry> relations_;
};

// Stages delimited files and resolves the shared height (and dictionary)
// once every relation is known.
class CatalogBuilder {
 public:
  // `columns` names the file columns left to right; the index stores them
  // in global attribute order. All relations must agree on
  // options.dictionary. Throws FormatError for ragged rows, DomainError for
  // values that are not non-negative integers below 2^63 (raw mode) and
  // SchemaError for bad names.
  RelationMeta ingest(std::istream& in, const std::string& name,
                      const std::vector<std::string>& columns, const IngestOptions& options = {});
  RelationMeta ingest_file(const std::filesystem::path& path, const std::string& name,
                           const std::vector<std::string>& columns,
                           const IngestOptions& options = {});

  // Raw mode: smallest h >= 1 with 2^h above the largest value. Dictionary
  // mode: smallest h >= 1 with 2^h >= number of distinct tokens.
  Catalog build() const;

 private:
  struct Staged {
    RelationMeta meta;
    std::vector<unsigned> order;                 // global position -> file column
    std::vector<Point> values;                   // raw mode, file column order
    std::vector<std::vector<std::string>> rows;  // dictionary mode
  };

  std::optional<EncodingMode> mode_;
  std::vector<Staged> staged_;
};

// Identifier rule shared by relation and attribute names.
bool is_identifier(std::string_view name);

}  // namespace qdag
