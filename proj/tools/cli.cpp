#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qdag/catalog.hpp"
#include "qdag/error.hpp"
#include "qdag/lqdag.hpp"
#include "qdag/query.hpp"

namespace qdag {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RelationSpec {
  std::string name;
  std::vector<std::string> attributes;
  std::string path;
};

// NAME:ATTR[,ATTR...]=PATH
RelationSpec parse_relation_spec(const std::string& text) {
  const auto colon = text.find(':');
  const auto eq = text.find('=', colon == std::string::npos ? 0 : colon);
  if (colon == std::string::npos || eq == std::string::npos || colon == 0 || eq == colon + 1 ||
      eq + 1 == text.size()) {
    throw UsageError("expected NAME:ATTRS=PATH, got '" + text + "'");
  }
  RelationSpec spec;
  spec.name = text.substr(0, colon);
  spec.path = text.substr(eq + 1);
  const std::string attrs = text.substr(colon + 1, eq - colon - 1);
  std::size_t start = 0;
  while (true) {
    const auto comma = attrs.find(',', start);
    spec.attributes.push_back(attrs.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return spec;
}

struct BuildArgs {
  std::string out;
  std::vector<std::string> relations;
  bool dict = false;
  std::string delimiter = ",";
  bool header = false;
};

struct QueryArgs {
  std::string db;
  std::string expr;
  std::string output = "tuples";
  std::optional<std::uint64_t> limit;
  bool complement_encoded = false;
  std::vector<std::string> attach;
  bool header = false;
};

struct StatsArgs {
  std::string db;
  std::string relation;
};

int run_build(const BuildArgs& a, std::ostream& out) {
  if (a.delimiter.size() != 1) throw UsageError("--delim takes a single character");
  IngestOptions options;
  options.delimiter = a.delimiter[0];
  options.header = a.header;
  options.dictionary = a.dict;
  std::vector<RelationSpec> specs;
  for (const auto& r : a.relations) specs.push_back(parse_relation_spec(r));
  CatalogBuilder builder;
  for (const auto& s : specs) builder.ingest_file(s.path, s.name, s.attributes, options);
  const Catalog catalog = builder.build();
  catalog.save(a.out);
  out << "catalog " << a.out << ": " << catalog.relation_names().size() << " relations, height "
      << catalog.height() << '\n';
  for (const auto& name : catalog.relation_names()) {
    const auto& m = catalog.meta(name);
    out << "  " << name << '(' << m.attributes.to_string() << "): " << m.tuple_count
        << " tuples\n";
  }
  return kExitOk;
}

void print_tuples(const Catalog& catalog, const EvalResult& r, const QueryArgs& a,
                  std::ostream& out) {
  if (a.header) out << r.attributes.to_string() << '\n';
  std::string line;
  for_each_point(
      r.tree,
      [&](std::span<const Coord> p) {
        line.clear();
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (j > 0) line += ',';
          line += catalog.decode(p[j]);
        }
        line += '\n';
        out << line;
        return true;
      },
      a.limit);
}

void print_stats(const NormalizedQuery& q, const EvalResult& r, std::ostream& out) {
  out << "formula " << q.to_string() << '\n';
  out << "attributes " << r.attributes.to_string() << '\n';
  out << "tuples " << count_points(r.tree) << '\n';
  out << "nodes_expanded " << r.stats.nodes_expanded << '\n';
  out << "max_level_width " << r.stats.max_level_width << '\n';
  for (std::size_t t = 0; t < r.stats.per_level.size(); ++t) {
    out << "level " << t << ' ' << r.stats.per_level[t] << '\n';
  }
  for (std::size_t i = 0; i < r.atom_names.size(); ++i) {
    const auto at = [](const std::vector<std::uint64_t>& v, std::size_t k) {
      return k < v.size() ? v[k] : 0;
    };
    out << "access " << r.atom_names[i] << " value=" << at(r.counters.value_calls, i)
        << " child=" << at(r.counters.child_calls, i) << '\n';
  }
}

int run_query(const QueryArgs& a, std::ostream& out) {
  std::optional<std::string> qdx_path;
  if (a.output.rfind("qdx:", 0) == 0) {
    qdx_path = a.output.substr(4);
    if (qdx_path->empty()) throw UsageError("--output qdx: needs a path");
  } else if (a.output != "tuples" && a.output != "count" && a.output != "stats") {
    throw UsageError("--output must be tuples, count, stats or qdx:PATH");
  }
  const QueryAst ast = parse_query(a.expr);
  Catalog catalog = Catalog::load(a.db);
  for (const auto& spec_text : a.attach) {
    const RelationSpec spec = parse_relation_spec(spec_text);
    catalog.attach(spec.name, AttributeSet(spec.attributes),
                   std::make_shared<const CompactQuadtree>(load_qdx(spec.path)));
  }
  const RelationResolver resolve = [&catalog](const std::string& name) {
    return RelationSource{name, catalog.tree(name), catalog.meta(name).attributes};
  };
  const NormalizedQuery q = normalize(ast, resolve);
  if (q.has_complement() && catalog.mode() == EncodingMode::kDictionary && !a.complement_encoded) {
    throw UsageError(
        "query takes a complement over dictionary ids; pass --complement-encoded to allow it");
  }
  const EvalResult r = evaluate(q);
  if (qdx_path) {
    save_qdx(*qdx_path, r.tree);
    out << "wrote " << *qdx_path << " (" << r.attributes.to_string() << ", "
        << count_points(r.tree) << " tuples)\n";
  } else if (a.output == "count") {
    out << count_points(r.tree) << '\n';
  } else if (a.output == "stats") {
    print_stats(q, r, out);
  } else {
    print_tuples(catalog, r, a, out);
  }
  return kExitOk;
}

void print_relation(const std::string& name, const Catalog& catalog, std::ostream& out) {
  const auto& m = catalog.meta(name);
  const auto tree = catalog.tree(name);
  const TreeStats s = stats(*tree);
  out << "relation " << name << '\n';
  out << "  attributes " << m.attributes.to_string() << '\n';
  out << "  tuples " << m.tuple_count << '\n';
  out << "  index " << m.index_file << '\n';
  out << "  bits " << s.total_bits << " (ones " << s.one_bits << ")\n";
  if (m.tuple_count > 0) {
    out << "  bits_per_tuple " << static_cast<double>(s.total_bits) / double(m.tuple_count)
        << '\n';
  }
  for (std::size_t t = 0; t < s.groups_per_level.size(); ++t) {
    out << "  level " << t << " groups " << s.groups_per_level[t] << " full_leaves "
        << s.full_leaves_per_level[t] << '\n';
  }
}

int run_stats(const StatsArgs& a, std::ostream& out) {
  const Catalog catalog = Catalog::load(a.db);
  if (!a.relation.empty()) {
    print_relation(a.relation, catalog, out);
    return kExitOk;
  }
  out << "height " << catalog.height() << '\n';
  out << "mode " << (catalog.mode() == EncodingMode::kRaw ? "raw" : "dict") << '\n';
  out << "attributes " << catalog.attributes().to_string() << '\n';
  if (catalog.mode() == EncodingMode::kDictionary) {
    out << "dictionary " << catalog.dictionary().size() << '\n';
  }
  for (const auto& name : catalog.relation_names()) print_relation(name, catalog, out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relational queries over compact quadtrees", "qdag"};
  app.require_subcommand(1);

  BuildArgs build_args;
  auto* build = app.add_subcommand("build", "Index delimited files into a catalog directory");
  build->add_option("--out", build_args.out, "Catalog directory")->required();
  build->add_option("--relation", build_args.relations, "NAME:ATTRS=FILE, repeatable")
      ->required();
  build->add_flag("--dict", build_args.dict, "Dictionary-encode values");
  build->add_option("--delim", build_args.delimiter, "Field delimiter")->capture_default_str();
  build->add_flag("--header", build_args.header, "Skip the first line of every file");

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "Evaluate an expression against a catalog");
  query->add_option("--db", query_args.db, "Catalog directory")->required();
  query->add_option("--expr", query_args.expr, "Expression, e.g. JOIN(R,S,T)")->required();
  query->add_option("--output", query_args.output, "tuples | count | stats | qdx:PATH")
      ->capture_default_str();
  query->add_option("--limit", query_args.limit, "Print at most K tuples");
  query->add_flag("--complement-encoded", query_args.complement_encoded,
                  "Allow complements over dictionary ids");
  query->add_option("--attach", query_args.attach, "NAME:ATTRS=PATH.qdx, repeatable");
  query->add_flag("--header", query_args.header, "Print the attribute names first");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Describe a catalog");
  stats_cmd->add_option("--db", stats_args.db, "Catalog directory")->required();
  stats_cmd->add_option("--relation", stats_args.relation, "Only this relation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build) return run_build(build_args, out);
    if (*query) return run_query(query_args, out);
    return run_stats(stats_args, out);
  } catch (const UsageError& e) {
    err << "qdag: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "qdag: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "qdag: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "qdag: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace qdag
