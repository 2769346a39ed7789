#pragma once

// Dense kernels used by the numeric core. Each kernel exists twice: a plain
// serial reference kept for tests and benchmarks, and the OpenMP version the
// library calls. Matrices are row-major; shapes are checked by callers.

#include <cstddef>

#include "zeroshot/matrix.hpp"

namespace zeroshot::kernels {

namespace serial {

/// C += A * B
void gemm_nn(ConstView a, ConstView b, MutView c);
/// C += A * B^T
void gemm_nt(ConstView a, ConstView b, MutView c);
/// C += A^T * B
void gemm_tn(ConstView a, ConstView b, MutView c);
/// Euclidean distance between every pair of rows.
Matrix pairwise_distances(const Matrix& points);

}  // namespace serial

namespace omp {

// Rows of A that are entirely zero, and zero entries of A, are skipped. This is
// what makes hashed (sparse) text embeddings and masked pipeline rows cheap.
void gemm_nn(ConstView a, ConstView b, MutView c);
void gemm_nt(ConstView a, ConstView b, MutView c);
// Skips zero rows of B (rows of the upstream gradient outside the receptive field).
void gemm_tn(ConstView a, ConstView b, MutView c);
Matrix pairwise_distances(const Matrix& points);

}  // namespace omp

/// Distance from one point to each row of `points`.
void distances_to(const Matrix& points, const double* query, double* out);

/// Number of threads the OpenMP kernels will use.
int max_threads();

}  // namespace zeroshot::kernels
