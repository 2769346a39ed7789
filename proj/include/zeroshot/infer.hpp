#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/checkpoint.hpp"
#include "zeroshot/table.hpp"

namespace zeroshot::infer {

struct Timings {
  double metafeature_ms = 0.0;
  double embed_ms = 0.0;
  /// f_phi plus the k-NN search.
  double attach_ms = 0.0;
  /// g_theta, the GAT stack and both heads.
  double gnn_ms = 0.0;
  double total_ms = 0.0;
};

struct Recommendation {
  std::string dataset_id;
  PipelineLabel label;
  model::PipelineDistribution distribution;
  model::HeadLogits logits;
  /// Ids of the attached training neighbours, in graph order.
  std::vector<std::string> neighbor_ids;
  Timings timings;
};

/// A dataset to recommend for. Meta-features are computed from `table` unless
/// `meta` is given (raw, unstandardized). The description is hashed unless
/// `description_embedding` is given; checkpoints built on precomputed
/// embeddings require it.
struct Query {
  std::string dataset_id;
  const DataTable* table = nullptr;
  std::string description;
  std::optional<std::vector<double>> meta;
  std::optional<std::vector<double>> description_embedding;
};

/// Holds a frozen checkpoint and its inference cache. recommend() is const and
/// safe to call concurrently.
class Recommender {
 public:
  explicit Recommender(Checkpoint checkpoint);

  Recommender(const Recommender&) = delete;
  Recommender& operator=(const Recommender&) = delete;

  const Checkpoint& checkpoint() const noexcept { return checkpoint_; }

  Recommendation recommend(const Query& query) const;
  Recommendation recommend(const DataTable& table, std::string_view description,
                           std::string_view dataset_id) const;

 private:
  Checkpoint checkpoint_;
  model::InferenceEngine engine_;
};

struct PhaseStats {
  double median = 0.0;
  double mean = 0.0;
  double p95 = 0.0;
};

struct BenchSummary {
  std::size_t trials = 0;
  PhaseStats metafeature_ms, embed_ms, attach_ms, gnn_ms, total_ms;
  /// Checkpoint load and cache build, measured once by the caller.
  double load_ms = 0.0;
  Recommendation last;
};

inline constexpr std::size_t kMinBenchTrials = 10;

/// Runs `trials` sequential recommendations after one warm-up call.
BenchSummary bench(const Recommender& r, const Query& query, std::size_t trials);
std::string format_bench(const BenchSummary& s);

/// Median (mean of the middle pair for even counts), mean and nearest-rank p95.
PhaseStats summarize(std::vector<double> samples);

/// One line per recommendation:
/// `dataset_id <TAB> feature_processor <TAB> estimator <TAB> p_feat <TAB> p_est`.
std::string format_recommendations(const std::vector<Recommendation>& recs,
                                   const PrimitiveVocabulary& vocab);

/// Label agreement or downstream accuracy of one method on one dataset in one
/// trial. A missing accuracy marks a dataset the method could not score.
struct ResultRow {
  std::string method;
  std::string dataset;
  std::optional<double> accuracy;
  double time_seconds = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Header `method <TAB> dataset <TAB> accuracy <TAB> time_seconds`, then one
/// row each; `absent` stands for a missing accuracy.
std::string format_results(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results(std::string_view contents);
std::vector<ResultRow> load_results(const std::string& path);

struct Aggregate {
  std::string method;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  double median_time = 0.0;
  std::size_t datasets = 0;
};

/// Per-dataset medians across trials, then the aggregate over datasets, per
/// method in order of first appearance.
std::vector<Aggregate> aggregate(const std::vector<ResultRow>& rows);

enum class ReportFormat { tsv, text };
ReportFormat report_format_from_string(std::string_view s);

/// Per-dataset table (median accuracy and time per method) followed by the
/// aggregate table. Throws DataError on empty input.
std::string emit_report(const std::vector<ResultRow>& rows, ReportFormat format);

/// Method label for results produced by a checkpoint: `<ablation>:<embedder>`.
std::string method_label(const Checkpoint& ck);

}  // namespace zeroshot::infer
