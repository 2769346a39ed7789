#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace zeroshot {

enum class ColumnKind { numeric, categorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> text;
  std::vector<double> numbers;  // parsed values for numeric columns, 0 where missing
  std::vector<char> missing;
};

/// A delimited-text table held column-wise with one designated target column.
class DataTable {
 public:
  /// Builds and validates a table from a header and string cells. Cells equal
  /// to "", "?", "NA", "NaN", "nan" or "null" are missing. A column is numeric
  /// iff every non-missing cell parses as a number. `target` empty selects the
  /// last column; otherwise it names a column or gives a 0-based index.
  static DataTable from_cells(std::vector<std::string> header,
                              const std::vector<std::vector<std::string>>& rows,
                              std::string_view target = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t column_count() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t c) const { return columns_.at(c); }
  std::size_t target_index() const noexcept { return target_; }
  const Column& target() const { return columns_[target_]; }
  /// Indices of all non-target columns, in file order.
  std::vector<std::size_t> feature_indices() const;

  /// Sorted distinct target labels.
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  /// Per-row index into classes().
  const std::vector<std::size_t>& class_of_row() const noexcept { return class_of_row_; }

  /// Comma-separated rendering with header, readable by load_table.
  std::string to_csv() const;

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
  std::size_t target_ = 0;
  std::vector<std::string> classes_;
  std::vector<std::size_t> class_of_row_;
};

bool is_missing_token(std::string_view cell) noexcept;

/// Reads a comma- or tab-separated table with a header row. The delimiter is a
/// tab when the header contains one, otherwise a comma; double quotes may wrap
/// fields. Errors: empty file, ragged rows (ParseError with the row's line),
/// missing target cells and fewer than two classes (DataError).
DataTable load_table(const std::string& path, std::string_view target = {});
DataTable parse_table(std::string_view contents, std::string_view target = {});

}  // namespace zeroshot
