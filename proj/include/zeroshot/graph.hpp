#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "zeroshot/matrix.hpp"

namespace zeroshot::graph {

inline constexpr std::size_t kDefaultK = 20;

using Adjacency = std::vector<std::vector<std::size_t>>;

/// Symmetric k-NN graph over fused dataset representations.
struct DatasetGraph {
  std::vector<std::string> node_ids;
  /// One row per node.
  Matrix reps;
  /// Sorted neighbour lists, no self loops.
  Adjacency adjacency;

  std::size_t size() const noexcept { return adjacency.size(); }
  std::size_t edge_count() const;
  bool is_symmetric() const;

  friend bool operator==(const DatasetGraph&, const DatasetGraph&) = default;
};

/// n x n Euclidean distances.
Matrix pairwise_distances(const Matrix& reps);

/// Indices of the k smallest `distances`, ordered by (distance, index), never
/// including `exclude`.
std::vector<std::size_t> k_smallest(std::span<const double> distances, std::size_t k,
                                    std::size_t exclude = static_cast<std::size_t>(-1));

/// Directed k-NN lists symmetrized by union. Needs n >= 2 and k >= 1.
/// `ids` may be empty, in which case nodes are named by index.
DatasetGraph build_knn_graph(Matrix reps, std::size_t k, std::vector<std::string> ids = {});
/// Adjacency only, from a precomputed distance matrix.
Adjacency knn_adjacency(const Matrix& distances, std::size_t k);

/// The k nearest existing nodes of a new representation.
std::vector<std::size_t> nearest_nodes(const Matrix& reps, std::span<const double> rep,
                                       std::size_t k);

struct Attached {
  DatasetGraph graph;
  std::size_t index = 0;
};

/// Copy of `g` extended by one node joined to its k nearest existing nodes.
/// Old nodes gain the reverse edges; edges among old nodes are unchanged.
Attached attach_test_node(const DatasetGraph& g, std::span<const double> rep, std::size_t k,
                          std::string id = {});

/// `id_i <TAB> id_j <TAB> distance` per undirected edge with i < j.
std::string format_edges(const DatasetGraph& g);

}  // namespace zeroshot::graph
