#pragma once

// Generated dataset universes with known structure: every dataset belongs to
// a latent cluster that fixes its table statistics, its description
// vocabulary and its best pipeline.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "zeroshot/catalog.hpp"
#include "zeroshot/table.hpp"
#include "zeroshot/vocabulary.hpp"

namespace zeroshot::synthetic {

inline constexpr std::size_t kClusters = 4;

struct UniverseConfig {
  std::size_t train = 120;
  std::size_t test = 30;
  std::uint64_t seed = 0;
};

struct GeneratedDataset {
  std::string id;
  Split split = Split::train;
  std::size_t cluster = 0;
  DataTable table;
  std::string description;
};

struct Universe {
  std::vector<GeneratedDataset> datasets;
  /// Best pipeline of each cluster; pairwise distinct in both components.
  std::vector<PipelineLabel> cluster_labels;
  std::vector<PerformanceRecord> performance;
};

Universe generate(const UniverseConfig& config, const PrimitiveVocabulary& vocab);

/// Writes tables/, descriptions/, manifest.tsv and performance.tsv under
/// `dir` and returns the manifest path.
std::string write_universe(const Universe& universe, const PrimitiveVocabulary& vocab,
                           const std::string& dir);

/// Numeric table with a binary target, for latency measurements.
DataTable random_table(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace zeroshot::synthetic
