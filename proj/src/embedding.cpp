#include "zeroshot/embedding.hpp"

#include <cctype>
#include <cmath>

#include "zeroshot/error.hpp"
#include "zeroshot/hash.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot::embed {

std::string_view to_string(Provenance p) {
  return p == Provenance::hashed ? "hashed" : "precomputed";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "hashed") return Provenance::hashed;
  if (s == "precomputed") return Provenance::precomputed;
  throw ParseError("unknown embedding provenance '" + std::string(s) + "'");
}

std::span<const double> EmbeddingStore::at(std::string_view id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) throw DataError("no embedding for '" + std::string(id) + "'");
  return it->second;
}

void EmbeddingStore::insert(std::string id, std::vector<double> vec) {
  if (vec.size() != width_) {
    throw DataError("embedding '" + id + "' has width " + std::to_string(vec.size()) +
                    ", expected " + std::to_string(width_));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) throw DataError("embedding '" + id + "' has a non-finite value");
  }
  if (vectors_.contains(id)) throw DataError("duplicate embedding id '" + id + "'");
  vectors_.emplace(std::move(id), std::move(vec));
}

EmbeddingStore parse_embeddings(std::string_view contents, std::size_t expected_width) {
  text::LineReader reader(contents);
  const auto header = text::split_ws(reader.expect_line());
  if (header.size() != 3 || header[0] != "ZSEMB") {
    throw ParseError("missing 'ZSEMB 1 <width>' header", 1);
  }
  if (header[1] != "1") {
    throw ParseError("embedding format version " + std::string(header[1]) +
                         " is not supported (expected 1)",
                     1);
  }
  const auto width = static_cast<std::size_t>(text::parse_uint(header[2], 1));
  if (width != expected_width) {
    throw DataError("embedding file declares width " + std::to_string(width) + ", expected " +
                    std::to_string(expected_width));
  }
  EmbeddingStore store(width, Provenance::precomputed);
  std::string_view line;
  while (reader.next(line)) {
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("embedding record needs 'id<TAB>values'", reader.line_number());
    }
    std::string id(line.substr(0, tab));
    const auto fields = text::split_ws(line.substr(tab + 1));
    std::vector<double> vec;
    vec.reserve(fields.size());
    for (auto f : fields) vec.push_back(text::parse_double(f, reader.line_number()));
    store.insert(std::move(id), std::move(vec));
  }
  return store;
}

EmbeddingStore load_embeddings(const std::string& path, std::size_t expected_width) {
  return parse_embeddings(text::read_file(path), expected_width);
}

std::string format_embeddings(const EmbeddingStore& store) {
  std::string out = "ZSEMB 1 " + std::to_string(store.width()) + "\n";
  for (const auto& [id, vec] : store.entries()) {
    out += id;
    out += '\t';
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (i) out += ' ';
      text::append_double(out, vec[i]);
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const EmbeddingStore& store, const std::string& path) {
  text::write_file_atomic(path, format_embeddings(store));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<double> hash_embed(std::string_view text, std::size_t width, std::uint64_t seed) {
  if (width == 0) throw ConfigError("hash_embed width must be at least 1");
  std::vector<double> v(width, 0.0);
  for (const auto& tok : tokenize(text)) {
    const std::uint64_t h = stable_hash(tok, seed);
    v[(h & 0xffffffffULL) % width] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

EmbeddingStore hash_primitive_docs(const PrimitiveVocabulary& vocab, std::size_t width,
                                   std::uint64_t seed) {
  EmbeddingStore store(width, Provenance::hashed);
  for (const auto& list : {&vocab.feature_processors, &vocab.estimators}) {
    for (const auto& name : *list) {
      auto it = vocab.doc_text.find(name);
      const std::string_view doc = it == vocab.doc_text.end() ? std::string_view(name) : it->second;
      store.insert(name, hash_embed(doc, width, seed));
    }
  }
  return store;
}

std::vector<double> embed_pipeline(const PipelineLabel& label, const PrimitiveVocabulary& vocab,
                                   const EmbeddingStore& docs) {
  if (!vocab.contains(label)) throw DataError("pipeline label outside the vocabulary");
  const auto& fp = vocab.feature_processors[label.feature_processor];
  const auto& est = vocab.estimators[label.estimator];
  if (!docs.contains(fp)) throw DataError("no documentation embedding for primitive '" + fp + "'");
  if (!docs.contains(est)) {
    throw DataError("no documentation embedding for primitive '" + est + "'");
  }
  const auto a = docs.at(fp);
  const auto b = docs.at(est);
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<double> zero_pipeline_embedding(std::size_t width) {
  return std::vector<double>(2 * width, 0.0);
}

}  // namespace zeroshot::embed
