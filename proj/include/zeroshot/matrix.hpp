#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace zeroshot {

/// Non-owning row-major view.
struct ConstView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
};

struct MutView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double& operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  operator ConstView() const noexcept { return {data, rows, cols}; }
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  operator ConstView() const noexcept { return {data_.data(), rows_, cols_}; }
  operator MutView() noexcept { return {data_.data(), rows_, cols_}; }
  /// Rows [first, first + count) as a view.
  ConstView row_block(std::size_t first, std::size_t count) const noexcept {
    return {data_.data() + first * cols_, count, cols_};
  }
  MutView row_block(std::size_t first, std::size_t count) noexcept {
    return {data_.data() + first * cols_, count, cols_};
  }

  void fill(double v);
  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace zeroshot
