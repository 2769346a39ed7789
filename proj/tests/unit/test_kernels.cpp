#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "zeroshot/kernels.hpp"

namespace {

using namespace zeroshot;
using zs_test::random_matrix;

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Every fourth row zero and scattered zero entries, so the skip paths run.
Matrix sparse_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m = random_matrix(r, c, seed);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (i % 4 == 1 || (i + j) % 3 == 0) m(i, j) = 0.0;
  return m;
}

struct Shape {
  std::size_t m, k, n;
};

class GemmShapes : public ::testing::TestWithParam<Shape> {};

TEST_P(GemmShapes, NnMatchesSerial) {
  const auto [m, k, n] = GetParam();
  const Matrix a = sparse_matrix(m, k, 1), b = random_matrix(k, n, 2);
  Matrix c1 = random_matrix(m, n, 3), c2 = c1;
  kernels::serial::gemm_nn(a, b, c1);
  kernels::omp::gemm_nn(a, b, c2);
  EXPECT_LT(max_abs_diff(c1, c2), 1e-12);
}

TEST_P(GemmShapes, NtMatchesSerial) {
  const auto [m, k, n] = GetParam();
  const Matrix a = sparse_matrix(m, k, 4), b = random_matrix(n, k, 5);
  Matrix c1 = random_matrix(m, n, 6), c2 = c1;
  kernels::serial::gemm_nt(a, b, c1);
  kernels::omp::gemm_nt(a, b, c2);
  EXPECT_LT(max_abs_diff(c1, c2), 1e-12);
}

TEST_P(GemmShapes, TnMatchesSerial) {
  const auto [m, k, n] = GetParam();
  const Matrix a = sparse_matrix(m, k, 7), b = sparse_matrix(m, n, 8);
  Matrix c1 = random_matrix(k, n, 9), c2 = c1;
  kernels::serial::gemm_tn(a, b, c1);
  kernels::omp::gemm_tn(a, b, c2);
  EXPECT_LT(max_abs_diff(c1, c2), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Kernels, GemmShapes,
                         ::testing::Values(Shape{1, 1, 1}, Shape{3, 5, 2}, Shape{4, 4, 4},
                                           Shape{7, 13, 9}, Shape{33, 17, 65}, Shape{64, 128, 32}));

TEST(Kernels, GemmAccumulatesIntoC) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
  Matrix c = Matrix::from_rows({{1, 1}, {1, 1}});
  kernels::omp::gemm_nn(a, b, c);
  EXPECT_EQ(c, Matrix::from_rows({{20, 23}, {44, 51}}));
}

TEST(Kernels, PairwiseDistancesMatchSerial) {
  const Matrix p = random_matrix(37, 11, 10);
  const Matrix d1 = kernels::serial::pairwise_distances(p);
  const Matrix d2 = kernels::omp::pairwise_distances(p);
  EXPECT_LT(max_abs_diff(d1, d2), 1e-12);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    EXPECT_EQ(d2(i, i), 0.0);
    for (std::size_t j = 0; j < p.rows(); ++j) EXPECT_EQ(d2(i, j), d2(j, i));
  }
}

TEST(Kernels, PairwiseDistanceOfKnownPoints) {
  const Matrix p = Matrix::from_rows({{0, 0}, {3, 4}, {6, 8}});
  const Matrix d = kernels::omp::pairwise_distances(p);
  EXPECT_DOUBLE_EQ(d(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(d(0, 2), 10.0);
  EXPECT_DOUBLE_EQ(d(1, 2), 5.0);
}

TEST(Kernels, DistancesToMatchesPairwiseRow) {
  const Matrix p = random_matrix(20, 6, 11);
  const Matrix d = kernels::omp::pairwise_distances(p);
  std::vector<double> out(p.rows());
  kernels::distances_to(p, p.row(5).data(), out.data());
  for (std::size_t j = 0; j < p.rows(); ++j) EXPECT_NEAR(out[j], d(5, j), 1e-12);
}

TEST(Kernels, ReportsAtLeastOneThread) { EXPECT_GE(kernels::max_threads(), 1); }

}  // namespace
