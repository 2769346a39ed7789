#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/table.hpp"

namespace zeroshot::meta {

/// Number of entries in the built-in registry.
inline constexpr std::size_t kRegistryWidth = 42;
/// Landmarkers that compare rows pairwise use at most this many rows.
inline constexpr std::size_t kLandmarkRowCap = 200;

/// Ordered names of the built-in registry.
const std::vector<std::string>& registry_names();

struct MetaFeatureVector {
  std::vector<double> values;
  /// How many entries were undefined and filled with 0.
  std::size_t imputed = 0;
};

/// Computes the registry vector. `dataset_id` seeds the landmarker subsample so
/// the result is a pure function of (table contents, id).
MetaFeatureVector compute_metafeatures(const DataTable& table, std::string_view dataset_id);

/// Per-dimension location and scale fitted on training vectors.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t width() const noexcept { return mean.size(); }
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Scales below this floor are replaced by 1.
inline constexpr double kStddevFloor = 1e-8;

/// Population mean and standard deviation per dimension. Needs >= 2 vectors of
/// equal width.
Standardizer fit_standardizer(std::span<const std::vector<double>> vectors);
std::vector<double> standardize(std::span<const double> v, const Standardizer& s);
std::vector<double> destandardize(std::span<const double> v, const Standardizer& s);

}  // namespace zeroshot::meta
