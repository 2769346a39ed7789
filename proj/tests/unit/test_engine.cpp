#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"
#include "zeroshot/engine.hpp"
#include "zeroshot/error.hpp"

namespace {

using namespace zeroshot;
using namespace zeroshot::model;

struct EngineCase {
  ModelConfig cfg = zs_test::small_config(6);
  ZeroShotModel model{cfg, 31};
  std::size_t n = 20;
  Matrix fused = fuse_dataset(model, zs_test::random_matrix(n, 5, 32), zs_test::random_matrix(n, 8, 33));
  Matrix pipe = zs_test::random_matrix(n, 16, 34);
  graph::DatasetGraph g = graph::build_knn_graph(fused, cfg.k_neighbors);
  InferenceEngine engine{model, fused, pipe, g.adjacency};
};

void expect_logits_near(const HeadLogits& a, const TapedHeads& b) {
  ASSERT_EQ(a.feat.size(), b.feat_logits.cols());
  for (std::size_t j = 0; j < a.feat.size(); ++j) EXPECT_NEAR(a.feat[j], b.feat_logits.value()(0, j), 1e-12);
  for (std::size_t j = 0; j < a.est.size(); ++j) EXPECT_NEAR(a.est[j], b.est_logits.value()(0, j), 1e-12);
}

TEST(Engine, MaskedQueryMatchesTapedRoute) {
  EngineCase s;
  for (std::size_t i : {0u, 7u, 19u}) {
    ad::Tape t;
    const auto ref = masked_node_logits(t, s.model, t.constant(s.fused), s.pipe, s.g.adjacency, i);
    expect_logits_near(s.engine.query_masked(i), ref);
  }
}

TEST(Engine, NewNodeMatchesAttachedGraphRoute) {
  EngineCase s;
  const auto rep = fuse_dataset(s.model, zs_test::random_vector(5, 35), zs_test::random_vector(8, 36));
  std::vector<std::size_t> nbrs;
  const auto got = s.engine.query_new(rep, s.cfg.k_neighbors, &nbrs);
  EXPECT_EQ(nbrs, graph::nearest_nodes(s.fused, rep, s.cfg.k_neighbors));

  const auto attached = graph::attach_test_node(s.g, rep, s.cfg.k_neighbors);
  Matrix pipe(s.n + 1, s.cfg.d_pipe);
  for (std::size_t i = 0; i < s.n; ++i) std::copy(s.pipe.row(i).begin(), s.pipe.row(i).end(), pipe.row(i).data());
  ad::Tape t;
  const auto ref = masked_node_logits(t, s.model, t.constant(attached.graph.reps), pipe,
                                      attached.graph.adjacency, attached.index);
  expect_logits_near(got, ref);

  auto sorted = nbrs;
  std::sort(sorted.begin(), sorted.end());
  const auto again = s.engine.query_attached(rep, sorted);
  EXPECT_EQ(again, got);
}

TEST(Engine, QueriesDoNotMutateCache) {
  EngineCase s;
  const auto before = s.engine.query_masked(3);
  const Matrix out_before = s.engine.outputs();
  for (std::uint64_t q = 0; q < 5; ++q) s.engine.query_new(zs_test::random_vector(6, 40 + q), 3);
  EXPECT_EQ(s.engine.query_masked(3), before);
  EXPECT_EQ(s.engine.outputs(), out_before);
}

TEST(Engine, OutputsMatchFullForward) {
  EngineCase s;
  const Matrix full = gat_forward(s.model, fuse_node(s.model, s.fused, s.pipe), s.g.adjacency);
  for (std::size_t i = 0; i < full.size(); ++i)
    EXPECT_NEAR(s.engine.outputs().values()[i], full.values()[i], 1e-12);
}

TEST(Engine, Errors) {
  EngineCase s;
  EXPECT_THROW(InferenceEngine(s.model, s.fused, s.pipe, graph::Adjacency(3)), ShapeError);
  EXPECT_THROW(s.engine.query_new(std::vector<double>(5), 3), ShapeError);
  EXPECT_THROW(s.engine.query_masked(s.n), Error);
}

}  // namespace
