#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/embedding.hpp"
#include "zeroshot/vocabulary.hpp"

namespace zeroshot {

enum class Split { train, test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

/// Which external AutoML system produced a performance record. The declaration
/// order is the tie-break order for best-label selection.
enum class Source { O, S };
std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

struct PerformanceRecord {
  std::string dataset_id;
  Source source = Source::O;
  PipelineLabel pipeline;
  double accuracy = 0.0;

  friend bool operator==(const PerformanceRecord&, const PerformanceRecord&) = default;
};

struct DatasetRecord {
  std::string id;
  Split split = Split::train;
  std::string table_path;
  /// Target column name or index; empty means the last column.
  std::string target;
  std::string description;
  /// File holding an externally supplied meta vector; empty when computed.
  std::string meta_path;

  std::optional<std::vector<double>> meta;
  std::size_t meta_imputed = 0;
  std::optional<std::vector<double>> desc_embedding;
  std::optional<PipelineLabel> best_label;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct Catalog {
  PrimitiveVocabulary vocabulary = PrimitiveVocabulary::standard();
  std::vector<std::string> meta_names;
  /// Documentation embeddings by primitive name.
  embed::EmbeddingStore primitive_docs;
  std::uint64_t embedding_seed = 0;
  std::vector<DatasetRecord> datasets;
  std::vector<PerformanceRecord> performance;

  const DatasetRecord* find(std::string_view id) const;
  DatasetRecord* find(std::string_view id);
  std::size_t count(Split s) const;
  embed::Provenance provenance() const noexcept { return primitive_docs.provenance(); }
  std::size_t embedding_width() const noexcept { return primitive_docs.width(); }

  friend bool operator==(const Catalog&, const Catalog&) = default;
};

/// Manifest lines: `id <TAB> split <TAB> table <TAB> target <TAB> description`
/// with an optional sixth field `meta:<path>`. `-` stands for an empty target,
/// description or meta field. Relative paths resolve against the manifest's
/// directory; the description field names a text file.
Catalog parse_manifest(std::string_view contents, const std::string& base_dir = {});
Catalog load_manifest(const std::string& path);
/// Ids whose table file does not exist.
std::vector<std::string> missing_tables(const Catalog& catalog);

/// Lines `dataset_id <TAB> O|S <TAB> feature_processor <TAB> estimator <TAB> accuracy`.
std::vector<PerformanceRecord> parse_performance(std::string_view contents,
                                                 const PrimitiveVocabulary& vocab);
std::vector<PerformanceRecord> load_performance(const std::string& path,
                                                const PrimitiveVocabulary& vocab);

/// Replaces the catalog's performance records and recomputes every best label:
/// highest accuracy, then source O before S, then lower estimator index, then
/// lower feature-processor index. Test datasets are labeled too so evaluation
/// has ground truth. Returns the ids of training datasets left unlabeled.
std::vector<std::string> attach_labels(Catalog& catalog, std::span<const PerformanceRecord> records);

struct FeatureOptions {
  std::size_t embedding_width = embed::kDefaultWidth;
  std::uint64_t seed = 0;
  /// When set, descriptions (by dataset id) and primitive docs (by name) come
  /// from this store instead of the hashing embedder.
  const embed::EmbeddingStore* precomputed = nullptr;
};

/// Fills meta-feature vectors, description embeddings and primitive doc
/// embeddings. Tables are read from disk; meta_path vectors are read instead
/// of computed. All datasets must agree on the meta width.
void compute_features(Catalog& catalog, const FeatureOptions& options);

/// Whitespace-separated reals, `#` comment lines allowed.
std::vector<double> load_meta_vector(const std::string& path);

/// `ZSCAT 1` text document; every real value round-trips bit-exactly.
std::string format_catalog(const Catalog& catalog);
Catalog parse_catalog(std::string_view contents);
void save_catalog(const Catalog& catalog, const std::string& path);
Catalog load_catalog(const std::string& path);

}  // namespace zeroshot
