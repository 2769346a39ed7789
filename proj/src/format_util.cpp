#include "format_util.hpp"

#include <exception>

#include "zeroshot/error.hpp"

namespace zeroshot::detail {

void append_vector(std::string& out, std::span<const double> v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    text::append_double(out, v[i]);
  }
}

std::vector<double> parse_vector(std::string_view s, std::size_t expected, std::size_t line) {
  std::vector<double> v;
  v.reserve(expected);
  for (auto tok : text::split_ws(s)) v.push_back(text::parse_double(tok, line));
  if (v.size() != expected) {
    throw ParseError("expected " + std::to_string(expected) + " values, found " +
                         std::to_string(v.size()),
                     line);
  }
  return v;
}

std::string_view expect_key(text::LineReader& reader, std::string_view key) {
  const std::string_view line = reader.expect_line();
  const auto tab = line.find('\t');
  const std::string_view head = line.substr(0, tab);
  if (head != key) {
    throw ParseError("expected '" + std::string(key) + "', found '" + std::string(head) + "'",
                     reader.line_number());
  }
  return tab == std::string_view::npos ? std::string_view() : line.substr(tab + 1);
}

std::vector<std::string_view> fields_of(std::string_view rest, std::size_t n, std::size_t line) {
  auto f = text::split(rest, '\t');
  if (f.size() != n) {
    throw ParseError("expected " + std::to_string(n) + " fields, found " +
                         std::to_string(f.size()),
                     line);
  }
  return f;
}

void append_vocabulary(std::string& out, const PrimitiveVocabulary& v) {
  out += "vocabulary\t" + std::to_string(v.feature_processors.size()) + "\t" +
         std::to_string(v.estimators.size()) + "\n";
  auto doc_of = [&](const std::string& name) {
    auto it = v.doc_text.find(name);
    return it == v.doc_text.end() ? std::string() : it->second;
  };
  for (const auto& name : v.feature_processors)
    out += "feature_processor\t" + text::escape(name) + "\t" + text::escape(doc_of(name)) + "\n";
  for (const auto& name : v.estimators)
    out += "estimator\t" + text::escape(name) + "\t" + text::escape(doc_of(name)) + "\n";
}

PrimitiveVocabulary read_vocabulary(text::LineReader& reader) {
  PrimitiveVocabulary v;
  const auto f = fields_of(expect_key(reader, "vocabulary"), 2, reader.line_number());
  const auto n_fp = text::parse_uint(f[0], reader.line_number());
  const auto n_est = text::parse_uint(f[1], reader.line_number());
  for (std::uint64_t i = 0; i < n_fp + n_est; ++i) {
    const char* key = i < n_fp ? "feature_processor" : "estimator";
    const auto g = fields_of(expect_key(reader, key), 2, reader.line_number());
    std::string name = text::unescape(g[0], reader.line_number());
    v.doc_text[name] = text::unescape(g[1], reader.line_number());
    (i < n_fp ? v.feature_processors : v.estimators).push_back(std::move(name));
  }
  v.validate();
  return v;
}

void append_names(std::string& out, std::string_view key, const std::vector<std::string>& names) {
  out += std::string(key) + "\t" + std::to_string(names.size());
  for (const auto& n : names) out += "\t" + text::escape(n);
  out += "\n";
}

std::vector<std::string> read_names(text::LineReader& reader, std::string_view key) {
  const auto f = text::split(expect_key(reader, key), '\t');
  const auto n = text::parse_uint(f[0], reader.line_number());
  if (f.size() != n + 1) {
    throw ParseError(std::string(key) + " count mismatch", reader.line_number());
  }
  std::vector<std::string> out;
  for (std::size_t i = 1; i < f.size(); ++i)
    out.push_back(text::unescape(f[i], reader.line_number()));
  return out;
}

void append_docs(std::string& out, const embed::EmbeddingStore& docs, std::uint64_t seed) {
  out += "docs\t" + std::to_string(docs.width()) + "\t" +
         std::string(embed::to_string(docs.provenance())) + "\t" + std::to_string(seed) + "\t" +
         std::to_string(docs.size()) + "\n";
  for (const auto& [name, vec] : docs.entries()) {
    out += "doc\t" + text::escape(name) + "\t";
    append_vector(out, vec);
    out += "\n";
  }
}

embed::EmbeddingStore read_docs(text::LineReader& reader, std::uint64_t& seed) {
  const auto f = fields_of(expect_key(reader, "docs"), 4, reader.line_number());
  const std::size_t ln = reader.line_number();
  const auto width = text::parse_uint(f[0], ln);
  embed::Provenance prov;
  try {
    prov = embed::provenance_from_string(f[1]);
  } catch (const Error& e) {
    throw ParseError(e.what(), ln);
  }
  seed = text::parse_uint(f[2], ln);
  const auto n = text::parse_uint(f[3], ln);
  embed::EmbeddingStore docs(width, prov);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto g = fields_of(expect_key(reader, "doc"), 2, reader.line_number());
    docs.insert(text::unescape(g[0], reader.line_number()),
                parse_vector(g[1], width, reader.line_number()));
  }
  return docs;
}

void rethrow_with_path(const std::string& path) {
  try {
    throw;
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace zeroshot::detail
