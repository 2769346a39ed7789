#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "zeroshot/autodiff.hpp"
#include "zeroshot/error.hpp"

namespace {

using namespace zeroshot;
using namespace zeroshot::ad;

Parameter param(const std::string& name, std::size_t r, std::size_t c, std::uint64_t seed) {
  return Parameter(name, nudge_off_kinks(zs_test::random_matrix(r, c, seed)));
}

// Weighted scalar read-out so every output entry gets a distinct upstream gradient.
Var probe(Var x, Parameter& w) { return sum(matmul(x, w)); }

void expect_gradients_match(const std::function<Var(Tape&)>& build,
                            std::vector<Parameter*> params) {
  const auto report = grad_check(build, params);
  for (const auto& e : report.entries) {
    EXPECT_EQ(e.failures, 0u) << e.name << " max rel " << e.max_rel_error;
    EXPECT_GT(e.checked, 0u) << e.name;
  }
  EXPECT_TRUE(report.passed());
}

TEST(GradCheck, Affine) {
  auto x = param("x", 3, 4, 1), w = param("w", 4, 5, 2), b = param("b", 1, 5, 3);
  auto p = param("p", 5, 1, 4);
  expect_gradients_match(
      [&](Tape& t) { return probe(affine(t.parameter(x), w, b), p); }, {&x, &w, &b, &p});
}

TEST(GradCheck, AffineOverConcatenatedInputs) {
  auto x1 = param("x1", 2, 3, 5), x2 = param("x2", 2, 2, 6);
  auto w = param("w", 8, 3, 7), b = param("b", 1, 3, 8), p = param("p", 3, 1, 9);
  const Matrix frozen = zs_test::random_matrix(2, 3, 10);
  expect_gradients_match(
      [&](Tape& t) {
        const Var in[] = {t.parameter(x1), t.constant(frozen), t.parameter(x2)};
        return probe(affine(in, w, b), p);
      },
      {&x1, &x2, &w, &b, &p});
}

TEST(GradCheck, ConcatenatedAffineEqualsExplicitConcat) {
  auto w = param("w", 5, 2, 11), b = param("b", 1, 2, 12);
  const Matrix a = zs_test::random_matrix(3, 2, 13), c = zs_test::random_matrix(3, 3, 14);
  Tape t;
  const Var in[] = {t.constant(a), t.constant(c)};
  const Var fused = affine(in, w, b);
  const Var plain = affine(concat(t.constant(a), t.constant(c)), w, b);
  for (std::size_t i = 0; i < fused.value().size(); ++i) {
    EXPECT_NEAR(fused.value().values()[i], plain.value().values()[i], 1e-14);
  }
}

TEST(GradCheck, LeakyReluConcatAddGather) {
  auto a = param("a", 4, 3, 15), c = param("c", 4, 2, 16), d = param("d", 3, 5, 17);
  auto p = param("p", 5, 1, 18);
  const std::size_t rows[] = {2, 0, 2};
  expect_gradients_match(
      [&](Tape& t) {
        const Var cat = leaky_relu(concat(t.parameter(a), t.parameter(c)), 0.2);
        return probe(add(gather_rows(cat, rows), t.parameter(d)), p);
      },
      {&a, &c, &d, &p});
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  auto x = param("x", 1, 6, 19), w = param("w", 6, 6, 20);
  expect_gradients_match(
      [&](Tape& t) { return cross_entropy(softmax_rows(matmul(t.parameter(x), w)), 2); },
      {&x, &w});
}

AttentionNeighborhood small_neighborhood() {
  AttentionNeighborhood n;
  const std::vector<std::vector<std::size_t>> lists = {{1, 2}, {}, {0, 3, 4}, {2}, {0, 1, 2, 3}};
  for (const auto& l : lists) n.add_row(l);
  return n;
}

TEST(GradCheck, GraphAttention) {
  auto x = param("x", 5, 4, 21), w = param("w", 4, 3, 22), z = param("z", 1, 6, 23);
  auto p = param("p", 3, 1, 24);
  const auto nb = small_neighborhood();
  expect_gradients_match(
      [&](Tape& t) { return probe(graph_attention(matmul(t.parameter(x), w), z, nb, 0.2), p); },
      {&x, &w, &z, &p});
}

TEST(GraphAttention, MatchesDenseReference) {
  const Matrix h = zs_test::random_matrix(5, 3, 25);
  Parameter z("z", zs_test::random_matrix(1, 6, 26));
  const auto nb = small_neighborhood();
  Tape t;
  const Matrix out = graph_attention(t.constant(h), z, nb, 0.2).value();
  ASSERT_EQ(out.rows(), 5u);
  ASSERT_EQ(out.cols(), 3u);
  auto leaky = [](double v) { return v > 0 ? v : 0.2 * v; };
  for (std::size_t r = 0; r < 5; ++r) {
    std::vector<std::size_t> members = {r};
    for (auto j : nb.of(r)) members.push_back(j);
    std::vector<double> e;
    for (auto j : members) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += z.value(0, k) * h(r, k) + z.value(0, 3 + k) * h(j, k);
      e.push_back(leaky(s));
    }
    double mx = -std::numeric_limits<double>::infinity(), total = 0.0;
    for (double v : e) mx = std::max(mx, v);
    for (double& v : e) total += (v = std::exp(v - mx));
    for (std::size_t k = 0; k < 3; ++k) {
      double expect = 0.0;
      for (std::size_t m = 0; m < members.size(); ++m) expect += e[m] / total * h(members[m], k);
      EXPECT_NEAR(out(r, k), expect, 1e-13) << r << "," << k;
    }
  }
}

TEST(GraphAttention, IsolatedRowReturnsItself) {
  const Matrix h = zs_test::random_matrix(5, 3, 27);
  Parameter z("z", zs_test::random_matrix(1, 6, 28));
  Tape t;
  const Matrix out = graph_attention(t.constant(h), z, small_neighborhood(), 0.2).value();
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(out(1, k), h(1, k));
}

TEST(Tape, BackwardValues) {
  Parameter w("w", Matrix::from_rows({{2.0}, {-3.0}}));
  Tape t;
  const Var x = t.constant(Matrix::from_rows({{1.0, 4.0}}));
  const Var y = sum(matmul(x, w));
  EXPECT_DOUBLE_EQ(y.scalar(), -10.0);
  t.backward(y);
  EXPECT_EQ(w.grad, Matrix::from_rows({{1.0}, {4.0}}));
  t.backward(y);
  EXPECT_EQ(w.grad, Matrix::from_rows({{2.0}, {8.0}}));
  w.zero_grad();
  EXPECT_EQ(w.grad, Matrix(2, 1));
}

TEST(Tape, CrossEntropyFloorsProbability) {
  Tape t;
  const Var p = t.constant(Matrix::from_rows({{1.0, 0.0}}));
  EXPECT_NEAR(cross_entropy(p, 1).scalar(), -std::log(kProbabilityFloor), 1e-9);
  EXPECT_NEAR(cross_entropy(p, 0).scalar(), 0.0, 1e-15);
}

TEST(Tape, RejectsNonFiniteOpResults) {
  Tape t;
  const Var big = t.constant(Matrix(1, 2, 1e308));
  EXPECT_THROW(add(big, big), NumericError);
}

TEST(Tape, ShapeMismatchThrows) {
  Parameter w("w", Matrix(3, 2)), b("b", Matrix(1, 2));
  Tape t;
  EXPECT_THROW(affine(t.constant(Matrix(2, 4)), w, b), ShapeError);
  EXPECT_THROW(add(t.constant(Matrix(2, 2)), t.constant(Matrix(2, 3))), ShapeError);
}

TEST(Adam, MatchesReferenceTrajectory) {
  Parameter p("p", Matrix::from_rows({{0.5}}));
  Parameter* ps[] = {&p};
  const double grads[] = {2.0, -1.0, 0.25};
  const double expect[] = {0.499000000005, 0.4987336629670243, 0.4984580183110436};
  for (int i = 0; i < 3; ++i) {
    p.grad(0, 0) = grads[i];
    adam_step(ps, {});
    EXPECT_NEAR(p.value(0, 0), expect[i], 1e-15) << i;
  }
  EXPECT_EQ(p.step, 3);
}

TEST(Adam, FirstStepMovesEveryCoordinateByLearningRate) {
  Parameter p("p", zs_test::random_matrix(3, 3, 29));
  const Matrix before = p.value;
  p.grad = zs_test::random_matrix(3, 3, 30);
  Parameter* ps[] = {&p};
  adam_step(ps, {.lr = 0.01});
  for (std::size_t i = 0; i < 9; ++i) {
    const double g = p.grad.values()[i];
    EXPECT_NEAR(before.values()[i] - p.value.values()[i], 0.01 * g / (std::abs(g) + 1e-8), 1e-15);
  }
}

TEST(NudgeOffKinks, MovesSmallEntriesOut) {
  const Matrix m = nudge_off_kinks(Matrix::from_rows({{0.0, 1e-4, -1e-4, 0.5}}), 1e-3);
  EXPECT_EQ(std::abs(m(0, 0)), 1e-3);
  EXPECT_EQ(m(0, 1), 1e-3);
  EXPECT_EQ(m(0, 2), -1e-3);
  EXPECT_EQ(m(0, 3), 0.5);
}

}  // namespace
