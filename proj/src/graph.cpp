#include "zeroshot/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "zeroshot/error.hpp"
#include "zeroshot/kernels.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot::graph {

std::size_t DatasetGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& n : adjacency) twice += n.size();
  return twice / 2;
}

bool DatasetGraph::is_symmetric() const {
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    for (std::size_t j : adjacency[i]) {
      if (j == i || j >= adjacency.size()) return false;
      const auto& back = adjacency[j];
      if (!std::binary_search(back.begin(), back.end(), i)) return false;
    }
  }
  return true;
}

Matrix pairwise_distances(const Matrix& reps) { return kernels::omp::pairwise_distances(reps); }

std::vector<std::size_t> k_smallest(std::span<const double> distances, std::size_t k,
                                    std::size_t exclude) {
  std::vector<std::size_t> idx;
  idx.reserve(distances.size());
  for (std::size_t j = 0; j < distances.size(); ++j)
    if (j != exclude) idx.push_back(j);
  k = std::min(k, idx.size());
  auto less = [&](std::size_t a, std::size_t b) {
    return distances[a] != distances[b] ? distances[a] < distances[b] : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), less);
  idx.resize(k);
  return idx;
}

Adjacency knn_adjacency(const Matrix& distances, std::size_t k) {
  const std::size_t n = distances.rows();
  if (n < 2) throw DataError("a k-NN graph needs at least 2 nodes, got " + std::to_string(n));
  if (k < 1) throw ConfigError("k must be at least 1");
  Adjacency adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : k_smallest(distances.row(i), k, i)) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

DatasetGraph build_knn_graph(Matrix reps, std::size_t k, std::vector<std::string> ids) {
  const std::size_t n = reps.rows();
  if (ids.empty()) {
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  }
  if (ids.size() != n) {
    throw ShapeError("build_knn_graph: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(n) + " rows");
  }
  if (n < 2) throw DataError("a k-NN graph needs at least 2 nodes, got " + std::to_string(n));
  DatasetGraph g;
  g.adjacency = knn_adjacency(pairwise_distances(reps), k);
  g.node_ids = std::move(ids);
  g.reps = std::move(reps);
  return g;
}

std::vector<std::size_t> nearest_nodes(const Matrix& reps, std::span<const double> rep,
                                       std::size_t k) {
  if (rep.size() != reps.cols()) {
    throw ShapeError("representation width " + std::to_string(rep.size()) +
                     " does not match graph width " + std::to_string(reps.cols()));
  }
  std::vector<double> d(reps.rows());
  kernels::distances_to(reps, rep.data(), d.data());
  return k_smallest(d, k);
}

Attached attach_test_node(const DatasetGraph& g, std::span<const double> rep, std::size_t k,
                          std::string id) {
  if (g.size() == 0) throw DataError("cannot attach a node to an empty graph");
  if (k < 1) throw ConfigError("k must be at least 1");
  const auto nbrs = nearest_nodes(g.reps, rep, k);
  Attached out{g, g.size()};
  DatasetGraph& h = out.graph;
  Matrix reps(h.reps.rows() + 1, h.reps.cols());
  std::copy(h.reps.values().begin(), h.reps.values().end(), reps.data());
  std::copy(rep.begin(), rep.end(), reps.row(out.index).data());
  h.reps = std::move(reps);
  h.node_ids.push_back(id.empty() ? std::to_string(out.index) : std::move(id));
  h.adjacency.emplace_back(nbrs.begin(), nbrs.end());
  std::sort(h.adjacency.back().begin(), h.adjacency.back().end());
  for (std::size_t j : nbrs) h.adjacency[j].push_back(out.index);  // index is the largest
  return out;
}

std::string format_edges(const DatasetGraph& g) {
  std::string out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto a = g.reps.row(i);
    for (std::size_t j : g.adjacency[i]) {
      if (j <= i) continue;
      const auto b = g.reps.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
      out += g.node_ids[i] + "\t" + g.node_ids[j] + "\t" + text::format_double(std::sqrt(s)) +
             "\n";
    }
  }
  return out;
}

}  // namespace zeroshot::graph
