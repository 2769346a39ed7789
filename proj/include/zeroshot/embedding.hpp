#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/vocabulary.hpp"

namespace zeroshot::embed {

inline constexpr std::size_t kDefaultWidth = 1024;

enum class Provenance { precomputed, hashed };
std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

/// Fixed-width vectors by id.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t width, Provenance provenance)
      : width_(width), provenance_(provenance) {}

  std::size_t width() const noexcept { return width_; }
  Provenance provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(std::string_view id) const { return vectors_.find(id) != vectors_.end(); }
  /// Throws DataError naming the id when absent.
  std::span<const double> at(std::string_view id) const;
  const std::map<std::string, std::vector<double>, std::less<>>& entries() const noexcept {
    return vectors_;
  }

  /// Throws DataError on a width mismatch, a non-finite value or a duplicate id.
  void insert(std::string id, std::vector<double> vec);

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::size_t width_ = kDefaultWidth;
  Provenance provenance_ = Provenance::precomputed;
  std::map<std::string, std::vector<double>, std::less<>> vectors_;
};

/// Exchange format: `ZSEMB 1 <width>` then `id <TAB> v1 <SP> v2 ...` per record.
EmbeddingStore parse_embeddings(std::string_view contents, std::size_t expected_width);
EmbeddingStore load_embeddings(const std::string& path, std::size_t expected_width);
std::string format_embeddings(const EmbeddingStore& store);
void save_embeddings(const EmbeddingStore& store, const std::string& path);

/// Lower-cased tokens split on ASCII non-alphanumerics. Bytes >= 0x80 are
/// kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing: every token adds +/-1 to one of `width` buckets, both
/// chosen by a seeded stable hash; the sum is scaled to unit length unless zero.
std::vector<double> hash_embed(std::string_view text, std::size_t width, std::uint64_t seed);

/// Embeds every primitive's documentation text with hash_embed.
EmbeddingStore hash_primitive_docs(const PrimitiveVocabulary& vocab, std::size_t width,
                                   std::uint64_t seed);

/// [doc(feature processor) | doc(estimator)], 2 * width long.
std::vector<double> embed_pipeline(const PipelineLabel& label, const PrimitiveVocabulary& vocab,
                                   const EmbeddingStore& docs);
std::vector<double> zero_pipeline_embedding(std::size_t width);

}  // namespace zeroshot::embed
