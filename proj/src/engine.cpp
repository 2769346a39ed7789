#include "zeroshot/engine.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "zeroshot/error.hpp"
#include "zeroshot/kernels.hpp"

namespace zeroshot::model {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t c = 0; c < n; ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

InferenceEngine::InferenceEngine(const ZeroShotModel& model, const Matrix& fused,
                                 const Matrix& pipe, graph::Adjacency adjacency)
    : model_(&model), fused_(fused), adjacency_(std::move(adjacency)) {
  const auto& c = model.config();
  const std::size_t n = fused.rows();
  if (pipe.rows() != n || adjacency_.size() != n) {
    throw ShapeError("engine inputs disagree on node count");
  }
  layer_u_.push_back(fuse_node(model, fused, pipe));
  for (std::size_t l = 0; l < c.gat_layers; ++l) {
    const std::size_t d = c.gat_hidden;
    Matrix h(n, d);
    kernels::omp::gemm_nn(layer_u_.back(), model.gat_w[l].value, h);
    const double* zs = model.gat_z[l].value.data();
    const double* zn = zs + d;
    std::vector<double> centre(n), score(n);
    for (std::size_t i = 0; i < n; ++i) {
      centre[i] = dot(h.row(i).data(), zs, d);
      score[i] = dot(h.row(i).data(), zn, d);
    }
    Matrix y(n, d);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<const double*> rows{h.row(i).data()};
      std::vector<double> sc{score[i]};
      for (std::size_t j : adjacency_[i]) {
        rows.push_back(h.row(j).data());
        sc.push_back(score[j]);
      }
      attend(rows, centre[i], sc, d, c.leaky_slope, y.row(i).data());
    }
    if (l + 1 < c.gat_layers) {
      for (double& v : y.values()) v = v > 0.0 ? v : c.leaky_slope * v;
    }
    layer_h_.push_back(std::move(h));
    centre_.push_back(std::move(centre));
    score_.push_back(std::move(score));
    layer_u_.push_back(std::move(y));
  }
}

HeadLogits InferenceEngine::query_new(std::span<const double> rep, std::size_t k,
                                      std::vector<std::size_t>* neighbors) const {
  if (k < 1) throw ConfigError("k must be at least 1");
  auto nbrs = graph::nearest_nodes(fused_, rep, k);
  std::sort(nbrs.begin(), nbrs.end());
  HeadLogits out = query_attached(rep, nbrs);
  if (neighbors) *neighbors = std::move(nbrs);
  return out;
}

HeadLogits InferenceEngine::query_attached(std::span<const double> rep,
                                           std::span<const std::size_t> neighbors) const {
  const auto& c = model_->config();
  if (rep.size() != c.d_fused) {
    throw ShapeError("query representation width " + std::to_string(rep.size()) +
                     ", expected " + std::to_string(c.d_fused));
  }
  std::vector<std::size_t> sorted(neighbors.begin(), neighbors.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j : sorted)
    if (j >= size()) throw ShapeError("query neighbour out of range");
  const std::vector<double> zeros(c.d_pipe, 0.0);
  const auto u = fuse_node(*model_, rep, zeros);
  return run(size(), true, u, sorted);
}

HeadLogits InferenceEngine::query_masked(std::size_t i) const {
  const auto& c = model_->config();
  if (i >= size()) throw ShapeError("masked node out of range");
  const std::vector<double> zeros(c.d_pipe, 0.0);
  const auto u = fuse_node(*model_, fused_.row(i), zeros);
  return run(i, false, u, {});
}

HeadLogits InferenceEngine::run(std::size_t q, bool is_new, std::span<const double> u_q,
                                std::span<const std::size_t> new_neighbors) const {
  const auto& c = model_->config();
  const std::size_t n = size();
  const std::size_t total = n + (is_new ? 1 : 0);
  const std::size_t layers = c.gat_layers;
  const std::size_t d = c.gat_hidden;

  std::vector<char> touches(total, 0);
  for (std::size_t j : new_neighbors) touches[j] = 1;
  std::vector<std::size_t> scratch;
  auto nb = [&](std::size_t r) -> std::span<const std::size_t> {
    if (is_new && r == n) return new_neighbors;
    if (!touches[r]) return adjacency_[r];
    scratch.assign(adjacency_[r].begin(), adjacency_[r].end());
    scratch.push_back(n);
    return scratch;
  };

  // need[l]: rows whose layer-l input is read; dirty[l]: rows whose layer-l
  // input differs from the cache.
  std::vector<std::vector<char>> need(layers + 1, std::vector<char>(total, 0));
  std::vector<std::vector<char>> dirty(layers + 1, std::vector<char>(total, 0));
  need[layers][q] = 1;
  for (std::size_t l = layers; l-- > 1;) {
    need[l] = need[l + 1];
    for (std::size_t r = 0; r < total; ++r) {
      if (!need[l + 1][r]) continue;
      for (std::size_t j : nb(r)) need[l][j] = 1;
    }
  }
  dirty[0][q] = 1;
  for (std::size_t l = 0; l < layers; ++l) {
    dirty[l + 1] = dirty[l];
    for (std::size_t r = 0; r < total; ++r) {
      if (!dirty[l][r]) continue;
      for (std::size_t j : nb(r)) dirty[l + 1][j] = 1;
    }
  }

  std::vector<std::size_t> fresh_rows{q};
  Matrix fresh_u(1, u_q.size());
  std::copy(u_q.begin(), u_q.end(), fresh_u.data());
  std::vector<std::size_t> slot(total, kNone);

  for (std::size_t l = 0; l < layers; ++l) {
    std::fill(slot.begin(), slot.end(), kNone);
    for (std::size_t s = 0; s < fresh_rows.size(); ++s) slot[fresh_rows[s]] = s;
    Matrix fresh_h(fresh_rows.size(), d);
    kernels::omp::gemm_nn(fresh_u, model_->gat_w[l].value, fresh_h);
    const double* zs = model_->gat_z[l].value.data();
    const double* zn = zs + d;
    std::vector<double> fc(fresh_rows.size()), fs(fresh_rows.size());
    for (std::size_t s = 0; s < fresh_rows.size(); ++s) {
      fc[s] = dot(fresh_h.row(s).data(), zs, d);
      fs[s] = dot(fresh_h.row(s).data(), zn, d);
    }
    auto h_row = [&](std::size_t j) {
      return slot[j] != kNone ? fresh_h.row(slot[j]).data() : layer_h_[l].row(j).data();
    };
    auto score = [&](std::size_t j) { return slot[j] != kNone ? fs[slot[j]] : score_[l][j]; };

    std::vector<std::size_t> out_rows;
    for (std::size_t r = 0; r < total; ++r)
      if (need[l + 1][r] && dirty[l + 1][r]) out_rows.push_back(r);
    Matrix out(out_rows.size(), d);
    std::vector<const double*> rows;
    std::vector<double> sc;
    for (std::size_t o = 0; o < out_rows.size(); ++o) {
      const std::size_t r = out_rows[o];
      rows.assign({h_row(r)});
      sc.assign({score(r)});
      for (std::size_t j : nb(r)) {
        rows.push_back(h_row(j));
        sc.push_back(score(j));
      }
      const double centre = slot[r] != kNone ? fc[slot[r]] : centre_[l][r];
      attend(rows, centre, sc, d, c.leaky_slope, out.row(o).data());
    }
    if (l + 1 < layers) {
      for (double& v : out.values()) v = v > 0.0 ? v : c.leaky_slope * v;
    }
    fresh_rows = std::move(out_rows);
    fresh_u = std::move(out);
  }
  return head_logits(*model_, fresh_u.row(0));
}

}  // namespace zeroshot::model
