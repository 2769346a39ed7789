#include "zeroshot/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "zeroshot/error.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot {

namespace {

std::vector<std::string> split_record(std::string_view line, char sep, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == sep) {
      out.push_back(std::string(text::trim(field)));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no);
  out.push_back(std::string(text::trim(field)));
  return out;
}

bool parse_number(std::string_view s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

bool is_missing_token(std::string_view cell) noexcept {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" || cell == "nan" ||
         cell == "null";
}

DataTable DataTable::from_cells(std::vector<std::string> header,
                                const std::vector<std::vector<std::string>>& rows,
                                std::string_view target) {
  if (header.empty()) throw ParseError("table has no columns");
  DataTable t;
  t.rows_ = rows.size();
  t.columns_.resize(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    Column& col = t.columns_[c];
    col.name = std::move(header[c]);
    col.text.reserve(rows.size());
    col.missing.reserve(rows.size());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw ParseError("row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                           " fields, expected " + std::to_string(header.size()),
                       r + 2);
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      t.columns_[c].text.push_back(rows[r][c]);
      t.columns_[c].missing.push_back(is_missing_token(rows[r][c]));
    }
  }

  for (Column& col : t.columns_) {
    col.numbers.assign(t.rows_, 0.0);
    bool numeric = true;
    for (std::size_t r = 0; r < t.rows_ && numeric; ++r) {
      if (col.missing[r]) continue;
      numeric = parse_number(col.text[r], col.numbers[r]);
    }
    col.kind = numeric ? ColumnKind::numeric : ColumnKind::categorical;
    if (!numeric) col.numbers.assign(t.rows_, 0.0);
  }

  if (target.empty()) {
    t.target_ = t.columns_.size() - 1;
  } else {
    auto it = std::find_if(t.columns_.begin(), t.columns_.end(),
                           [&](const Column& c) { return c.name == target; });
    if (it != t.columns_.end()) {
      t.target_ = static_cast<std::size_t>(it - t.columns_.begin());
    } else {
      std::size_t idx = 0;
      auto res = std::from_chars(target.data(), target.data() + target.size(), idx);
      if (res.ec != std::errc() || res.ptr != target.data() + target.size() ||
          idx >= t.columns_.size()) {
        throw DataError("target column '" + std::string(target) + "' not found");
      }
      t.target_ = idx;
    }
  }

  const Column& y = t.columns_[t.target_];
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.rows_; ++r) {
    if (y.missing[r]) {
      throw DataError("target value missing in row " + std::to_string(r + 1));
    }
    index.emplace(y.text[r], 0);
  }
  if (index.size() < 2) {
    throw DataError("target column '" + y.name + "' has fewer than 2 distinct classes");
  }
  std::size_t k = 0;
  for (auto& [label, i] : index) {
    i = k++;
    t.classes_.push_back(label);
  }
  t.class_of_row_.reserve(t.rows_);
  for (std::size_t r = 0; r < t.rows_; ++r) t.class_of_row_.push_back(index.at(y.text[r]));
  return t;
}

std::vector<std::size_t> DataTable::feature_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < columns_.size(); ++c)
    if (c != target_) out.push_back(c);
  return out;
}

std::string DataTable::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) out += ',';
    out += quote_csv(columns_[c].name);
  }
  out += '\n';
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (c) out += ',';
      out += quote_csv(columns_[c].text[r]);
    }
    out += '\n';
  }
  return out;
}

DataTable parse_table(std::string_view contents, std::string_view target) {
  text::LineReader reader(contents);
  std::string_view line;
  bool have_header = false;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  char sep = ',';
  while (reader.next(line)) {
    if (text::trim(line).empty()) continue;
    if (!have_header) {
      sep = line.find('\t') != std::string_view::npos ? '\t' : ',';
      header = split_record(line, sep, reader.line_number());
      have_header = true;
      continue;
    }
    auto fields = split_record(line, sep, reader.line_number());
    if (fields.size() != header.size()) {
      throw ParseError("ragged row " + std::to_string(rows.size() + 1) + ": " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(header.size()),
                       reader.line_number());
    }
    rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError("empty table file");
  if (rows.empty()) throw DataError("table has a header but no rows");
  return DataTable::from_cells(std::move(header), rows, target);
}

DataTable load_table(const std::string& path, std::string_view target) {
  try {
    return parse_table(text::read_file(path), target);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace zeroshot
