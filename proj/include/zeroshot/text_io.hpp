#pragma once

// Round-trip exact number formatting and small text helpers shared by the
// file formats (catalog, embeddings, checkpoints, reports).

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zeroshot::text {

/// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);
void append_double(std::string& out, double v);

/// Parses a complete token as a double; throws ParseError (with `line`) on junk.
double parse_double(std::string_view token, std::size_t line = 0);
std::int64_t parse_int(std::string_view token, std::size_t line = 0);
std::uint64_t parse_uint(std::string_view token, std::size_t line = 0);

/// Splits on a single character; keeps empty fields.
std::vector<std::string_view> split(std::string_view s, char sep);
/// Splits on runs of spaces/tabs; drops empty fields.
std::vector<std::string_view> split_ws(std::string_view s);
std::string_view trim(std::string_view s);

/// Backslash escaping of tab, newline, carriage return and backslash.
std::string escape(std::string_view s);
std::string unescape(std::string_view s, std::size_t line = 0);

std::string read_file(const std::string& path);
/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

/// Line reader over an in-memory document that tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view doc) : doc_(doc) {}
  bool next(std::string_view& line);
  std::size_t line_number() const noexcept { return line_; }
  /// Next line or ParseError("unexpected end of file").
  std::string_view expect_line();

 private:
  std::string_view doc_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

}  // namespace zeroshot::text
