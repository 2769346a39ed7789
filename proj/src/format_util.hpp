#pragma once

// Line-record helpers shared by the catalog and checkpoint formats.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/embedding.hpp"
#include "zeroshot/text_io.hpp"
#include "zeroshot/vocabulary.hpp"

namespace zeroshot::detail {

void append_vector(std::string& out, std::span<const double> v);
std::vector<double> parse_vector(std::string_view s, std::size_t expected, std::size_t line);

/// Reads the next line, checks that its first tab-field equals `key` and
/// returns the remainder.
std::string_view expect_key(text::LineReader& reader, std::string_view key);
std::vector<std::string_view> fields_of(std::string_view rest, std::size_t n, std::size_t line);

void append_vocabulary(std::string& out, const PrimitiveVocabulary& v);
PrimitiveVocabulary read_vocabulary(text::LineReader& reader);

void append_names(std::string& out, std::string_view key, const std::vector<std::string>& names);
std::vector<std::string> read_names(text::LineReader& reader, std::string_view key);

/// `docs <TAB> width <TAB> provenance <TAB> seed <TAB> count` then one `doc` line per entry.
void append_docs(std::string& out, const embed::EmbeddingStore& docs, std::uint64_t seed);
embed::EmbeddingStore read_docs(text::LineReader& reader, std::uint64_t& seed);

/// Rewraps a ParseError or DataError with a path prefix.
[[noreturn]] void rethrow_with_path(const std::string& path);

}  // namespace zeroshot::detail
