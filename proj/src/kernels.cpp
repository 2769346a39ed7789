#include "zeroshot/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

namespace zeroshot::kernels {

namespace {

constexpr std::size_t kBlock = 4;  // rows per register block

inline double squared_distance(const double* __restrict a, const double* __restrict b,
                               std::size_t d) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t t = 0; t < d; ++t) {
    const double diff = a[t] - b[t];
    s += diff * diff;
  }
  return s;
}

std::vector<char> nonzero_rows(ConstView m) {
  std::vector<char> flags(m.rows, 0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* p = m.data + r * m.cols;
    flags[r] = std::any_of(p, p + m.cols, [](double v) { return v != 0.0; });
  }
  return flags;
}

}  // namespace

namespace serial {

void gemm_nn(ConstView a, ConstView b, MutView c) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = c(i, j);
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
}

void gemm_nt(ConstView a, ConstView b, MutView c) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = c(i, j);
      for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
}

void gemm_tn(ConstView a, ConstView b, MutView c) {
  for (std::size_t p = 0; p < a.cols; ++p)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double s = c(p, j);
      for (std::size_t i = 0; i < a.rows; ++i) s += a(i, p) * b(i, j);
      c(p, j) = s;
    }
}

Matrix pairwise_distances(const Matrix& points) {
  const std::size_t n = points.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < points.cols(); ++t) {
        const double diff = points(i, t) - points(j, t);
        s += diff * diff;
      }
      d(i, j) = std::sqrt(s);
    }
  return d;
}

}  // namespace serial

namespace omp {

void gemm_nn(ConstView a, ConstView b, MutView c) {
  const std::size_t m = a.rows, kdim = a.cols, n = b.cols;
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((m + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t rows = std::min(kBlock, m - i0);
    if (rows == kBlock) {
      const double* a0 = a.data + i0 * kdim;
      const double* a1 = a0 + kdim;
      const double* a2 = a1 + kdim;
      const double* a3 = a2 + kdim;
      double* __restrict c0 = c.data + i0 * n;
      double* __restrict c1 = c0 + n;
      double* __restrict c2 = c1 + n;
      double* __restrict c3 = c2 + n;
      for (std::size_t k = 0; k < kdim; ++k) {
        const double v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
        if (v0 == 0.0 && v1 == 0.0 && v2 == 0.0 && v3 == 0.0) continue;
        const double* __restrict br = b.data + k * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
          const double bv = br[j];
          c0[j] += v0 * bv;
          c1[j] += v1 * bv;
          c2[j] += v2 * bv;
          c3[j] += v3 * bv;
        }
      }
    } else {
      for (std::size_t i = i0; i < i0 + rows; ++i) {
        const double* ar = a.data + i * kdim;
        double* __restrict cr = c.data + i * n;
        for (std::size_t k = 0; k < kdim; ++k) {
          const double v = ar[k];
          if (v == 0.0) continue;
          const double* __restrict br = b.data + k * n;
#pragma omp simd
          for (std::size_t j = 0; j < n; ++j) cr[j] += v * br[j];
        }
      }
    }
  }
}

void gemm_nt(ConstView a, ConstView b, MutView c) {
  const std::size_t m = a.rows, kdim = a.cols, n = b.rows;
  const auto live = nonzero_rows(a);
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (!live[i]) continue;
    const double* __restrict ar = a.data + i * kdim;
    double* cr = c.data + i * n;
    std::size_t j = 0;
    for (; j + kBlock <= n; j += kBlock) {
      const double* __restrict b0 = b.data + j * kdim;
      const double* __restrict b1 = b0 + kdim;
      const double* __restrict b2 = b1 + kdim;
      const double* __restrict b3 = b2 + kdim;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (std::size_t k = 0; k < kdim; ++k) {
        const double av = ar[k];
        s0 += av * b0[k];
        s1 += av * b1[k];
        s2 += av * b2[k];
        s3 += av * b3[k];
      }
      cr[j] += s0;
      cr[j + 1] += s1;
      cr[j + 2] += s2;
      cr[j + 3] += s3;
    }
    for (; j < n; ++j) {
      const double* __restrict br = b.data + j * kdim;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (std::size_t k = 0; k < kdim; ++k) s += ar[k] * br[k];
      cr[j] += s;
    }
  }
}

void gemm_tn(ConstView a, ConstView b, MutView c) {
  const std::size_t m = a.rows, kdim = a.cols, n = b.cols;
  const auto live = nonzero_rows(b);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m; ++i)
    if (live[i]) rows.push_back(i);
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((kdim + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t p0 = static_cast<std::size_t>(blk) * kBlock;
    const std::size_t width = std::min(kBlock, kdim - p0);
    if (width == kBlock) {
      double* __restrict c0 = c.data + p0 * n;
      double* __restrict c1 = c0 + n;
      double* __restrict c2 = c1 + n;
      double* __restrict c3 = c2 + n;
      for (std::size_t i : rows) {
        const double* ar = a.data + i * kdim + p0;
        const double v0 = ar[0], v1 = ar[1], v2 = ar[2], v3 = ar[3];
        if (v0 == 0.0 && v1 == 0.0 && v2 == 0.0 && v3 == 0.0) continue;
        const double* __restrict br = b.data + i * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
          const double bv = br[j];
          c0[j] += v0 * bv;
          c1[j] += v1 * bv;
          c2[j] += v2 * bv;
          c3[j] += v3 * bv;
        }
      }
    } else {
      for (std::size_t p = p0; p < p0 + width; ++p) {
        double* __restrict cr = c.data + p * n;
        for (std::size_t i : rows) {
          const double v = a(i, p);
          if (v == 0.0) continue;
          const double* __restrict br = b.data + i * n;
#pragma omp simd
          for (std::size_t j = 0; j < n; ++j) cr[j] += v * br[j];
        }
      }
    }
  }
}

Matrix pairwise_distances(const Matrix& points) {
  const std::size_t n = points.rows(), d = points.cols();
  Matrix out(n, n);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* pi = points.data() + i * d;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = std::sqrt(squared_distance(pi, points.data() + j * d, d));
      out(i, j) = dist;
      out(j, i) = dist;
    }
  }
  return out;
}

}  // namespace omp

void distances_to(const Matrix& points, const double* query, double* out) {
  const std::size_t d = points.cols();
  for (std::size_t j = 0; j < points.rows(); ++j)
    out[j] = std::sqrt(squared_distance(query, points.data() + j * d, d));
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace zeroshot::kernels
