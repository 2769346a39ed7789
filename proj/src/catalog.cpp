#include "zeroshot/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <tuple>
#include <utility>

#include "zeroshot/error.hpp"
#include "zeroshot/metafeatures.hpp"
#include "zeroshot/table.hpp"
#include "zeroshot/text_io.hpp"
#include "format_util.hpp"

namespace zeroshot {

namespace {

namespace fs = std::filesystem;
using detail::append_vector;
using detail::expect_key;
using detail::fields_of;
using detail::parse_vector;

constexpr std::string_view kCatalogMagic = "ZSCAT";
constexpr std::string_view kCatalogVersion = "1";

std::string resolve(std::string_view path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return std::string(path);
  fs::path p{std::string(path)};
  if (p.is_absolute()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

std::string optional_field(std::string_view f) { return f == "-" ? std::string() : std::string(f); }

}  // namespace

std::vector<double> load_meta_vector(const std::string& path) {
  const std::string contents = text::read_file(path);
  std::vector<double> v;
  text::LineReader reader(contents);
  std::string_view line;
  while (reader.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    for (auto tok : text::split_ws(line)) {
      const double x = text::parse_double(tok, reader.line_number());
      if (!std::isfinite(x)) throw DataError(path + ": non-finite meta value");
      v.push_back(x);
    }
  }
  if (v.empty()) throw DataError(path + ": meta file holds no values");
  return v;
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ParseError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(Source s) { return s == Source::O ? "O" : "S"; }

Source source_from_string(std::string_view s) {
  if (s == "O") return Source::O;
  if (s == "S") return Source::S;
  throw ParseError("unknown source '" + std::string(s) + "' (expected O or S)");
}

const DatasetRecord* Catalog::find(std::string_view id) const {
  for (const auto& d : datasets)
    if (d.id == id) return &d;
  return nullptr;
}

DatasetRecord* Catalog::find(std::string_view id) {
  for (auto& d : datasets)
    if (d.id == id) return &d;
  return nullptr;
}

std::size_t Catalog::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(datasets.begin(), datasets.end(), [&](const auto& d) { return d.split == s; }));
}

Catalog parse_manifest(std::string_view contents, const std::string& base_dir) {
  Catalog c;
  std::set<std::string, std::less<>> ids;
  text::LineReader reader(contents);
  std::string_view line;
  while (reader.next(line)) {
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    const std::size_t ln = reader.line_number();
    auto f = text::split(line, '\t');
    if (f.size() != 5 && f.size() != 6) {
      throw ParseError("manifest entry needs 5 or 6 tab-separated fields, found " +
                           std::to_string(f.size()),
                       ln);
    }
    for (auto& x : f) x = text::trim(x);
    if (f[0].empty()) throw ParseError("empty dataset id", ln);
    if (!ids.insert(std::string(f[0])).second) {
      throw DataError("duplicate dataset id '" + std::string(f[0]) + "' (line " +
                      std::to_string(ln) + ")");
    }
    DatasetRecord d;
    d.id = std::string(f[0]);
    try {
      d.split = split_from_string(f[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), ln);
    }
    if (f[2].empty() || f[2] == "-") throw ParseError("missing table path", ln);
    d.table_path = resolve(f[2], base_dir);
    d.target = optional_field(f[3]);
    const std::string desc_path = optional_field(f[4]);
    if (!desc_path.empty()) {
      const std::string full = resolve(desc_path, base_dir);
      d.description = std::string(text::trim(text::read_file(full)));
    }
    if (f.size() == 6 && f[5] != "-" && !f[5].empty()) {
      if (!f[5].starts_with("meta:")) {
        throw ParseError("sixth field must be meta:<path>, found '" + std::string(f[5]) + "'", ln);
      }
      d.meta_path = resolve(f[5].substr(5), base_dir);
    }
    c.datasets.push_back(std::move(d));
  }
  return c;
}

Catalog load_manifest(const std::string& path) {
  const std::string base = fs::path(path).parent_path().string();
  try {
    return parse_manifest(text::read_file(path), base);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<std::string> missing_tables(const Catalog& catalog) {
  std::vector<std::string> out;
  for (const auto& d : catalog.datasets) {
    std::error_code ec;
    if (!fs::is_regular_file(d.table_path, ec)) out.push_back(d.id);
  }
  return out;
}

std::vector<PerformanceRecord> parse_performance(std::string_view contents,
                                                 const PrimitiveVocabulary& vocab) {
  std::vector<PerformanceRecord> out;
  text::LineReader reader(contents);
  std::string_view line;
  while (reader.next(line)) {
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    const std::size_t ln = reader.line_number();
    auto f = text::split(line, '\t');
    if (f.size() != 5) {
      throw ParseError("performance record needs 5 tab-separated fields, found " +
                           std::to_string(f.size()),
                       ln);
    }
    for (auto& x : f) x = text::trim(x);
    if (f[0] == "dataset_id") continue;  // header
    PerformanceRecord r;
    r.dataset_id = std::string(f[0]);
    try {
      r.source = source_from_string(f[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), ln);
    }
    r.pipeline = vocab.label(f[2], f[3]);
    r.accuracy = text::parse_double(f[4], ln);
    if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) {
      throw ParseError("accuracy must lie in [0, 1]", ln);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PerformanceRecord> load_performance(const std::string& path,
                                                const PrimitiveVocabulary& vocab) {
  try {
    return parse_performance(text::read_file(path), vocab);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::string> attach_labels(Catalog& catalog,
                                       std::span<const PerformanceRecord> records) {
  std::set<std::pair<std::string_view, Source>> seen;
  for (const auto& r : records) {
    if (!catalog.find(r.dataset_id)) {
      throw DataError("performance record for unknown dataset '" + r.dataset_id + "'");
    }
    if (!catalog.vocabulary.contains(r.pipeline)) {
      throw DataError("performance record for '" + r.dataset_id +
                      "' names a pipeline outside the vocabulary");
    }
    if (!seen.insert({r.dataset_id, r.source}).second) {
      throw DataError("more than one record for dataset '" + r.dataset_id + "' and source " +
                      std::string(to_string(r.source)));
    }
  }

  std::vector<PerformanceRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dataset_id, a.source) < std::tie(b.dataset_id, b.source);
  });

  auto better = [](const PerformanceRecord& a, const PerformanceRecord& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.source != b.source) return a.source < b.source;
    if (a.pipeline.estimator != b.pipeline.estimator) {
      return a.pipeline.estimator < b.pipeline.estimator;
    }
    return a.pipeline.feature_processor < b.pipeline.feature_processor;
  };
  std::map<std::string_view, const PerformanceRecord*> best;
  for (const auto& r : sorted) {
    auto [it, fresh] = best.emplace(r.dataset_id, &r);
    if (!fresh && better(r, *it->second)) it->second = &r;
  }

  std::vector<std::string> unlabeled;
  for (auto& d : catalog.datasets) {
    auto it = best.find(d.id);
    if (it == best.end()) {
      d.best_label.reset();
      if (d.split == Split::train) unlabeled.push_back(d.id);
    } else {
      d.best_label = it->second->pipeline;
    }
  }
  catalog.performance = std::move(sorted);
  return unlabeled;
}

void compute_features(Catalog& catalog, const FeatureOptions& options) {
  if (options.precomputed && options.precomputed->width() != options.embedding_width) {
    throw ConfigError("precomputed embeddings have width " +
                      std::to_string(options.precomputed->width()) + ", expected " +
                      std::to_string(options.embedding_width));
  }
  catalog.embedding_seed = options.seed;
  if (options.precomputed) {
    embed::EmbeddingStore docs(options.embedding_width, embed::Provenance::precomputed);
    for (const auto* list : {&catalog.vocabulary.feature_processors, &catalog.vocabulary.estimators}) {
      for (const auto& name : *list) {
        if (!options.precomputed->contains(name)) {
          throw DataError("precomputed embeddings lack primitive '" + name + "'");
        }
        const auto v = options.precomputed->at(name);
        docs.insert(name, std::vector<double>(v.begin(), v.end()));
      }
    }
    catalog.primitive_docs = std::move(docs);
  } else {
    catalog.primitive_docs =
        embed::hash_primitive_docs(catalog.vocabulary, options.embedding_width, options.seed);
  }

  const std::size_t n = catalog.datasets.size();
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRecord& d = catalog.datasets[i];
    try {
      if (!d.meta_path.empty()) {
        d.meta = load_meta_vector(d.meta_path);
        d.meta_imputed = 0;
      } else {
        const DataTable t = load_table(d.table_path, d.target);
        auto mf = meta::compute_metafeatures(t, d.id);
        d.meta = std::move(mf.values);
        d.meta_imputed = mf.imputed;
      }
      if (options.precomputed) {
        const auto v = options.precomputed->at(d.id);
        d.desc_embedding = std::vector<double>(v.begin(), v.end());
      } else {
        d.desc_embedding = embed::hash_embed(d.description, options.embedding_width, options.seed);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  if (n == 0) return;
  const bool external = !catalog.datasets.front().meta_path.empty();
  const std::size_t width = catalog.datasets.front().meta->size();
  for (const auto& d : catalog.datasets) {
    if (d.meta_path.empty() == external) {
      throw DataError("dataset '" + d.id +
                      "' mixes computed and externally supplied meta-features");
    }
    if (d.meta->size() != width) {
      throw DataError("dataset '" + d.id + "' has " + std::to_string(d.meta->size()) +
                      " meta-features, expected " + std::to_string(width));
    }
  }
  if (external) {
    catalog.meta_names.clear();
    for (std::size_t j = 0; j < width; ++j) catalog.meta_names.push_back("meta_" + std::to_string(j));
  } else {
    catalog.meta_names = meta::registry_names();
  }
}

std::string format_catalog(const Catalog& c) {
  std::string out;
  out += std::string(kCatalogMagic) + " " + std::string(kCatalogVersion) + "\n";
  const auto& v = c.vocabulary;
  detail::append_vocabulary(out, v);
  detail::append_names(out, "meta_names", c.meta_names);
  detail::append_docs(out, c.primitive_docs, c.embedding_seed);

  out += "datasets\t" + std::to_string(c.datasets.size()) + "\n";
  for (const auto& d : c.datasets) {
    out += "dataset\t" + text::escape(d.id) + "\t" + std::string(to_string(d.split)) + "\t" +
           text::escape(d.table_path) + "\t" + text::escape(d.target) + "\t" +
           text::escape(d.meta_path) + "\n";
    out += "description\t" + text::escape(d.description) + "\n";
    if (d.meta) {
      out += "meta\t" + std::to_string(d.meta->size()) + "\t" + std::to_string(d.meta_imputed) +
             "\t";
      append_vector(out, *d.meta);
    } else {
      out += "meta\t-";
    }
    out += "\n";
    if (d.desc_embedding) {
      out += "desc_embedding\t" + std::to_string(d.desc_embedding->size()) + "\t";
      append_vector(out, *d.desc_embedding);
    } else {
      out += "desc_embedding\t-";
    }
    out += "\n";
    if (d.best_label) {
      out += "label\t" + text::escape(v.feature_processors[d.best_label->feature_processor]) +
             "\t" + text::escape(v.estimators[d.best_label->estimator]) + "\n";
    } else {
      out += "label\t-\n";
    }
  }

  out += "performance\t" + std::to_string(c.performance.size()) + "\n";
  for (const auto& r : c.performance) {
    out += "record\t" + text::escape(r.dataset_id) + "\t" + std::string(to_string(r.source)) +
           "\t" + text::escape(v.feature_processors[r.pipeline.feature_processor]) + "\t" +
           text::escape(v.estimators[r.pipeline.estimator]) + "\t" +
           text::format_double(r.accuracy) + "\n";
  }
  out += "end\n";
  return out;
}

Catalog parse_catalog(std::string_view contents) {
  text::LineReader reader(contents);
  std::string_view line;
  if (!reader.next(line)) throw ParseError("empty catalog file");
  {
    const auto head = text::split_ws(line);
    if (head.size() != 2 || head[0] != kCatalogMagic) {
      throw ParseError("not a catalog file (missing ZSCAT header)", 1);
    }
    if (head[1] != kCatalogVersion) {
      throw ParseError("catalog version " + std::string(head[1]) +
                           " is not supported (this build reads version " +
                           std::string(kCatalogVersion) + ")",
                       1);
    }
  }

  Catalog c;
  c.vocabulary = detail::read_vocabulary(reader);
  const auto& v = c.vocabulary;
  c.meta_names = detail::read_names(reader, "meta_names");
  c.primitive_docs = detail::read_docs(reader, c.embedding_seed);
  {
    const auto f = fields_of(expect_key(reader, "datasets"), 1, reader.line_number());
    const auto n = text::parse_uint(f[0], reader.line_number());
    for (std::uint64_t i = 0; i < n; ++i) {
      DatasetRecord d;
      auto g = fields_of(expect_key(reader, "dataset"), 5, reader.line_number());
      std::size_t ln = reader.line_number();
      d.id = text::unescape(g[0], ln);
      try {
        d.split = split_from_string(g[1]);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), ln);
      }
      d.table_path = text::unescape(g[2], ln);
      d.target = text::unescape(g[3], ln);
      d.meta_path = text::unescape(g[4], ln);
      d.description = text::unescape(expect_key(reader, "description"), reader.line_number());

      const auto meta = expect_key(reader, "meta");
      ln = reader.line_number();
      if (meta != "-") {
        const auto h = fields_of(meta, 3, ln);
        d.meta = parse_vector(h[2], text::parse_uint(h[0], ln), ln);
        d.meta_imputed = text::parse_uint(h[1], ln);
      }
      const auto emb = expect_key(reader, "desc_embedding");
      ln = reader.line_number();
      if (emb != "-") {
        const auto h = fields_of(emb, 2, ln);
        d.desc_embedding = parse_vector(h[1], text::parse_uint(h[0], ln), ln);
      }
      const auto lab = expect_key(reader, "label");
      ln = reader.line_number();
      if (lab != "-") {
        const auto h = fields_of(lab, 2, ln);
        d.best_label = v.label(text::unescape(h[0], ln), text::unescape(h[1], ln));
      }
      if (c.find(d.id)) throw DataError("duplicate dataset id '" + d.id + "' in catalog");
      c.datasets.push_back(std::move(d));
    }
  }
  {
    const auto f = fields_of(expect_key(reader, "performance"), 1, reader.line_number());
    const auto n = text::parse_uint(f[0], reader.line_number());
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto g = fields_of(expect_key(reader, "record"), 5, reader.line_number());
      const std::size_t ln = reader.line_number();
      PerformanceRecord r;
      r.dataset_id = text::unescape(g[0], ln);
      try {
        r.source = source_from_string(g[1]);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), ln);
      }
      r.pipeline = v.label(text::unescape(g[2], ln), text::unescape(g[3], ln));
      r.accuracy = text::parse_double(g[4], ln);
      c.performance.push_back(std::move(r));
    }
  }
  expect_key(reader, "end");
  while (reader.next(line)) {
    if (!text::trim(line).empty()) throw ParseError("trailing content after end", reader.line_number());
  }
  return c;
}

void save_catalog(const Catalog& catalog, const std::string& path) {
  text::write_file_atomic(path, format_catalog(catalog));
}

Catalog load_catalog(const std::string& path) {
  try {
    return parse_catalog(text::read_file(path));
  } catch (...) {
    detail::rethrow_with_path(path);
  }
}

}  // namespace zeroshot
