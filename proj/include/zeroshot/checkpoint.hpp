#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/embedding.hpp"
#include "zeroshot/engine.hpp"
#include "zeroshot/graph.hpp"
#include "zeroshot/metafeatures.hpp"
#include "zeroshot/model.hpp"
#include "zeroshot/vocabulary.hpp"

namespace zeroshot {

/// Everything needed to recommend without the catalog: the model, the meta
/// standardizer, primitive docs and the training graph rebuilt from the
/// final f_phi.
struct Checkpoint {
  model::ZeroShotModel model;
  meta::Standardizer standardizer;
  PrimitiveVocabulary vocabulary;
  std::vector<std::string> meta_names;
  embed::EmbeddingStore primitive_docs;
  std::uint64_t embedding_seed = 0;
  /// Training node ids, fused reps F and adjacency.
  graph::DatasetGraph graph;
  std::vector<PipelineLabel> labels;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;

  std::string ablation() const { return model.config().ablation(); }
  embed::Provenance provenance() const noexcept { return primitive_docs.provenance(); }
  /// Pipeline embeddings of the training nodes, one row each.
  Matrix pipeline_matrix() const;
  model::InferenceEngine engine() const;
};

/// `ZSCKPT 1` canonical text: parsing then formatting reproduces the input.
std::string format_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(std::string_view contents);
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace zeroshot
