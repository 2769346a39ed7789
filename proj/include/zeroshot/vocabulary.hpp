#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zeroshot {

/// A pipeline: one feature processor followed by one estimator, both given as
/// indices into a PrimitiveVocabulary.
struct PipelineLabel {
  std::size_t feature_processor = 0;
  std::size_t estimator = 0;

  friend auto operator<=>(const PipelineLabel&, const PipelineLabel&) = default;
};

/// The fixed set of primitives a model can recommend. Head widths of a trained
/// model depend on the list sizes, so indices must stay stable once trained.
struct PrimitiveVocabulary {
  std::vector<std::string> estimators;
  std::vector<std::string> feature_processors;
  std::map<std::string, std::string> doc_text;

  /// 18 estimators and 14 feature processors of the scikit-learn primitive set.
  static PrimitiveVocabulary standard();

  /// Tab-separated lines `estimator|feature_processor <TAB> name <TAB> doc`.
  static PrimitiveVocabulary load(const std::string& path);

  std::optional<std::size_t> find_estimator(std::string_view name) const;
  std::optional<std::size_t> find_feature_processor(std::string_view name) const;
  /// Throws DataError naming the primitive when it is not in the vocabulary.
  std::size_t estimator_index(std::string_view name) const;
  std::size_t feature_processor_index(std::string_view name) const;

  PipelineLabel label(std::string_view feature_processor, std::string_view estimator) const;
  bool contains(const PipelineLabel& label) const noexcept {
    return label.feature_processor < feature_processors.size() &&
           label.estimator < estimators.size();
  }
  std::string describe(const PipelineLabel& label) const;

  /// Throws DataError on empty lists or duplicate names.
  void validate() const;

  friend bool operator==(const PrimitiveVocabulary&, const PrimitiveVocabulary&) = default;
};

}  // namespace zeroshot
