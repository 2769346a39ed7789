#pragma once

// Cached forward pass over a frozen model and training graph. Every training
// node's per-layer activations are computed once; a query then recomputes only
// the rows whose inputs change, which is the query node plus a few hops of
// neighbours.

#include <cstddef>
#include <span>
#include <vector>

#include "zeroshot/graph.hpp"
#include "zeroshot/matrix.hpp"
#include "zeroshot/model.hpp"

namespace zeroshot::model {

class InferenceEngine {
 public:
  /// `fused` holds F for every training node, `pipe` their pipeline
  /// embeddings. The model must outlive the engine.
  InferenceEngine(const ZeroShotModel& model, const Matrix& fused, const Matrix& pipe,
                  graph::Adjacency adjacency);

  std::size_t size() const noexcept { return adjacency_.size(); }
  const graph::Adjacency& adjacency() const noexcept { return adjacency_; }
  const Matrix& fused() const noexcept { return fused_; }

  /// Logits for a new node with fused representation `rep`, joined to its k
  /// nearest training nodes (returned through `neighbors`), pipeline masked.
  HeadLogits query_new(std::span<const double> rep, std::size_t k,
                       std::vector<std::size_t>* neighbors = nullptr) const;
  /// As query_new but the node's neighbours are given.
  HeadLogits query_attached(std::span<const double> rep,
                            std::span<const std::size_t> neighbors) const;
  /// Logits for training node i with its own pipeline embedding masked.
  HeadLogits query_masked(std::size_t i) const;

  /// Final-layer outputs for every training node, unmasked.
  const Matrix& outputs() const noexcept { return layer_u_.back(); }

 private:
  HeadLogits run(std::size_t q, bool is_new, std::span<const double> u_q,
                 std::span<const std::size_t> new_neighbors) const;

  const ZeroShotModel* model_;
  Matrix fused_;
  graph::Adjacency adjacency_;
  std::vector<Matrix> layer_u_;  // inputs of each layer, then final output
  std::vector<Matrix> layer_h_;  // u W per layer
  std::vector<std::vector<double>> centre_;
  std::vector<std::vector<double>> score_;
};

}  // namespace zeroshot::model
