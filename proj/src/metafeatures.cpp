#include "zeroshot/metafeatures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include "zeroshot/error.hpp"
#include "zeroshot/hash.hpp"

namespace zeroshot::meta {

namespace {

// Sums after sorting so results do not depend on row order.
double ordered_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  bool defined = false;         // at least one value
  bool shape_defined = false;   // positive variance
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  m.defined = true;
  m.mean = ordered_sum(xs) / n;
  std::vector<double> d2, d3, d4;
  d2.reserve(xs.size());
  d3.reserve(xs.size());
  d4.reserve(xs.size());
  for (double x : xs) {
    const double d = x - m.mean;
    d2.push_back(d * d);
    d3.push_back(d * d * d);
    d4.push_back(d * d * d * d);
  }
  const double m2 = ordered_sum(std::move(d2)) / n;
  m.stddev = std::sqrt(m2);
  if (m2 > 0.0) {
    m.shape_defined = true;
    m.skewness = (ordered_sum(std::move(d3)) / n) / std::pow(m2, 1.5);
    m.kurtosis = (ordered_sum(std::move(d4)) / n) / (m2 * m2) - 3.0;
  }
  return m;
}

/// mean, min, max, population std of a list; zeros when empty.
std::array<double, 4> aggregate(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0, 0.0, 0.0};
  const Moments m = moments(xs);
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return {m.mean, *lo, *hi, m.stddev};
}

struct Encoded {
  std::vector<std::vector<double>> numeric;      // [row][numeric feature], z-scored, missing -> 0
  std::vector<std::vector<std::string_view>> categorical;  // [row][categorical feature]
};

/// z-scores numeric features over the given rows (population statistics of the
/// non-missing cells); missing cells become 0. Categorical cells keep their
/// text, with missing mapped to the empty string.
Encoded encode(const DataTable& t, const std::vector<std::size_t>& rows,
               const std::vector<std::size_t>& numeric_cols,
               const std::vector<std::size_t>& categorical_cols) {
  Encoded e;
  e.numeric.assign(rows.size(), std::vector<double>(numeric_cols.size(), 0.0));
  e.categorical.assign(rows.size(), std::vector<std::string_view>(categorical_cols.size()));
  for (std::size_t f = 0; f < numeric_cols.size(); ++f) {
    const Column& col = t.column(numeric_cols[f]);
    std::vector<double> present;
    for (std::size_t r : rows)
      if (!col.missing[r]) present.push_back(col.numbers[r]);
    const Moments m = moments(present);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t r = rows[i];
      if (col.missing[r] || !m.shape_defined) continue;
      e.numeric[i][f] = (col.numbers[r] - m.mean) / m.stddev;
    }
  }
  for (std::size_t f = 0; f < categorical_cols.size(); ++f) {
    const Column& col = t.column(categorical_cols[f]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t r = rows[i];
      e.categorical[i][f] = col.missing[r] ? std::string_view() : std::string_view(col.text[r]);
    }
  }
  return e;
}

/// Rows ordered by a content hash seeded with the dataset id; the first
/// kLandmarkRowCap of them form the landmarker subsample.
std::vector<std::size_t> hashed_row_order(const DataTable& t, std::string_view dataset_id) {
  const std::uint64_t seed = stable_hash(dataset_id);
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(t.rows());
  std::string buf;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    buf.clear();
    for (const Column& c : t.columns()) {
      buf += c.text[r];
      buf += '\x1f';
    }
    keyed.emplace_back(stable_hash(buf, seed), r);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> order;
  order.reserve(keyed.size());
  for (const auto& [h, r] : keyed) order.push_back(r);
  return order;
}

double one_nn_accuracy(const DataTable& t, std::vector<std::size_t> rows,
                       const std::vector<std::size_t>& numeric_cols,
                       const std::vector<std::size_t>& categorical_cols) {
  const Encoded e = encode(t, rows, numeric_cols, categorical_cols);
  const auto& y = t.class_of_row();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = i;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (std::size_t f = 0; f < numeric_cols.size(); ++f) {
        const double diff = e.numeric[i][f] - e.numeric[j][f];
        d += diff * diff;
      }
      for (std::size_t f = 0; f < categorical_cols.size(); ++f)
        d += e.categorical[i][f] != e.categorical[j][f] ? 1.0 : 0.0;
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (y[rows[best_j]] == y[rows[i]]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double stump_accuracy(const DataTable& t, const std::vector<std::size_t>& numeric_cols,
                      const std::vector<std::size_t>& categorical_cols, double majority) {
  const std::size_t n = t.rows();
  const std::size_t k = t.classes().size();
  const auto& y = t.class_of_row();
  std::vector<std::size_t> total(k, 0);
  for (std::size_t r = 0; r < n; ++r) ++total[y[r]];

  std::size_t best_correct = 0;
  for (std::size_t c : numeric_cols) {
    const Column& col = t.column(c);
    std::vector<double> present;
    for (std::size_t r = 0; r < n; ++r)
      if (!col.missing[r]) present.push_back(col.numbers[r]);
    const double fill = present.empty() ? 0.0 : moments(present).mean;
    std::vector<std::pair<double, std::size_t>> vals;
    vals.reserve(n);
    for (std::size_t r = 0; r < n; ++r) vals.emplace_back(col.missing[r] ? fill : col.numbers[r], y[r]);
    std::sort(vals.begin(), vals.end());
    std::vector<std::size_t> left(k, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left[vals[i].second];
      if (vals[i].first == vals[i + 1].first) continue;
      std::size_t l = 0, rr = 0;
      for (std::size_t cls = 0; cls < k; ++cls) {
        l = std::max(l, left[cls]);
        rr = std::max(rr, total[cls] - left[cls]);
      }
      best_correct = std::max(best_correct, l + rr);
    }
  }
  for (std::size_t c : categorical_cols) {
    const Column& col = t.column(c);
    std::map<std::string_view, std::vector<std::size_t>> counts;
    for (std::size_t r = 0; r < n; ++r) {
      auto& v = counts[col.missing[r] ? std::string_view() : std::string_view(col.text[r])];
      if (v.empty()) v.assign(k, 0);
      ++v[y[r]];
    }
    std::size_t correct = 0;
    for (const auto& [value, v] : counts) correct += *std::max_element(v.begin(), v.end());
    best_correct = std::max(best_correct, correct);
  }
  return std::max(majority, static_cast<double>(best_correct) / static_cast<double>(n));
}

double nearest_centroid_accuracy(const DataTable& t, const std::vector<std::size_t>& numeric_cols) {
  const std::size_t n = t.rows();
  const std::size_t k = t.classes().size();
  const std::size_t d = numeric_cols.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const Encoded e = encode(t, all, numeric_cols, {});
  const auto& y = t.class_of_row();

  std::vector<std::vector<double>> centroid(k, std::vector<double>(d, 0.0));
  for (std::size_t cls = 0; cls < k; ++cls) {
    for (std::size_t f = 0; f < d; ++f) {
      std::vector<double> members;
      for (std::size_t r = 0; r < n; ++r)
        if (y[r] == cls) members.push_back(e.numeric[r][f]);
      centroid[cls][f] = ordered_sum(members) / static_cast<double>(members.size());
    }
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t cls = 0; cls < k; ++cls) {
      double dist = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = e.numeric[r][f] - centroid[cls][f];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = cls;
      }
    }
    if (best == y[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

const std::vector<std::string>& registry_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {
        "n_rows",
        "n_features",
        "n_classes",
        "n_numeric_features",
        "n_categorical_features",
        "numeric_feature_ratio",
        "dimensionality",
        "missing_cell_ratio",
        "rows_with_missing_ratio",
        "features_with_missing_ratio",
        "class_entropy",
        "normalized_class_entropy",
        "class_prob_min",
        "class_prob_max",
        "class_prob_mean",
        "class_prob_std",
        "class_imbalance_ratio",
    };
    for (const char* stat : {"mean", "std", "skewness", "kurtosis"})
      for (const char* agg : {"mean", "min", "max", "std"})
        v.push_back(std::string("numeric_") + stat + "_" + agg);
    v.push_back("numeric_outlier_ratio");
    for (const char* agg : {"mean", "min", "max", "std"})
      v.push_back(std::string("categorical_cardinality_") + agg);
    v.push_back("landmark_1nn_accuracy");
    v.push_back("landmark_stump_accuracy");
    v.push_back("landmark_majority_accuracy");
    v.push_back("landmark_nearest_centroid_accuracy");
    return v;
  }();
  return names;
}

MetaFeatureVector compute_metafeatures(const DataTable& t, std::string_view dataset_id) {
  MetaFeatureVector out;
  auto& v = out.values;
  v.reserve(kRegistryWidth);
  auto put = [&](double x, bool defined = true) {
    v.push_back(defined ? x : 0.0);
    if (!defined) ++out.imputed;
  };

  const std::size_t n = t.rows();
  const auto features = t.feature_indices();
  std::vector<std::size_t> numeric_cols, categorical_cols;
  for (std::size_t c : features)
    (t.column(c).kind == ColumnKind::numeric ? numeric_cols : categorical_cols).push_back(c);
  const double nd = static_cast<double>(n);
  const double nf = static_cast<double>(features.size());

  std::size_t missing_cells = 0, cols_with_missing = 0, rows_with_missing = 0;
  std::vector<char> row_flag(n, 0);
  for (std::size_t c : features) {
    const Column& col = t.column(c);
    bool any = false;
    for (std::size_t r = 0; r < n; ++r) {
      if (!col.missing[r]) continue;
      ++missing_cells;
      any = true;
      row_flag[r] = 1;
    }
    cols_with_missing += any;
  }
  for (char f : row_flag) rows_with_missing += f;

  // Counts.
  put(nd);
  put(nf);
  put(static_cast<double>(t.classes().size()));
  put(static_cast<double>(numeric_cols.size()));
  put(static_cast<double>(categorical_cols.size()));
  put(features.empty() ? 0.0 : static_cast<double>(numeric_cols.size()) / nf, !features.empty());
  put(nf / nd);
  put(features.empty() ? 0.0 : static_cast<double>(missing_cells) / (nd * nf), !features.empty());
  put(static_cast<double>(rows_with_missing) / nd);
  put(features.empty() ? 0.0 : static_cast<double>(cols_with_missing) / nf, !features.empty());

  // Class distribution.
  const std::size_t k = t.classes().size();
  std::vector<double> probs(k, 0.0);
  for (std::size_t cls : t.class_of_row()) probs[cls] += 1.0;
  for (double& p : probs) p /= nd;
  double entropy = 0.0;
  for (double p : probs)
    if (p > 0.0) entropy -= p * std::log2(p);
  const auto class_agg = aggregate(probs);
  put(entropy);
  put(entropy / std::log2(static_cast<double>(k)));
  put(class_agg[1]);
  put(class_agg[2]);
  put(class_agg[0]);
  put(class_agg[3]);
  put(class_agg[2] / class_agg[1]);

  // Numeric column statistics, aggregated across columns.
  std::vector<double> means, stds, skews, kurts;
  std::size_t numeric_cells = 0, outliers = 0;
  for (std::size_t c : numeric_cols) {
    const Column& col = t.column(c);
    std::vector<double> present;
    for (std::size_t r = 0; r < n; ++r)
      if (!col.missing[r]) present.push_back(col.numbers[r]);
    const Moments m = moments(present);
    if (!m.defined) out.imputed += 2;
    if (!m.shape_defined) out.imputed += 2;
    means.push_back(m.mean);
    stds.push_back(m.stddev);
    skews.push_back(m.skewness);
    kurts.push_back(m.kurtosis);
    numeric_cells += present.size();
    if (m.shape_defined) {
      for (double x : present)
        if (std::abs(x - m.mean) > 3.0 * m.stddev) ++outliers;
    }
  }
  const bool have_numeric = !numeric_cols.empty();
  for (const auto* list : {&means, &stds, &skews, &kurts})
    for (double x : aggregate(*list)) put(x, have_numeric);
  put(numeric_cells ? static_cast<double>(outliers) / static_cast<double>(numeric_cells) : 0.0,
      numeric_cells > 0);

  // Categorical cardinalities.
  std::vector<double> cards;
  for (std::size_t c : categorical_cols) {
    const Column& col = t.column(c);
    std::set<std::string_view> distinct;
    for (std::size_t r = 0; r < n; ++r)
      if (!col.missing[r]) distinct.insert(col.text[r]);
    cards.push_back(static_cast<double>(distinct.size()));
  }
  for (double x : aggregate(cards)) put(x, !categorical_cols.empty());

  // Landmarkers.
  const double majority = class_agg[2];
  auto order = hashed_row_order(t, dataset_id);
  if (order.size() > kLandmarkRowCap) order.resize(kLandmarkRowCap);
  put(one_nn_accuracy(t, order, numeric_cols, categorical_cols));
  put(stump_accuracy(t, numeric_cols, categorical_cols, majority));
  put(majority);
  put(have_numeric ? nearest_centroid_accuracy(t, numeric_cols) : 0.0, have_numeric);

  return out;
}

Standardizer fit_standardizer(std::span<const std::vector<double>> vectors) {
  if (vectors.size() < 2) {
    throw DataError("fit_standardizer needs at least 2 vectors, got " +
                    std::to_string(vectors.size()));
  }
  const std::size_t w = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != w) {
      throw ShapeError("fit_standardizer: vectors of width " + std::to_string(w) + " and " +
                       std::to_string(v.size()));
    }
  }
  Standardizer s;
  s.mean.assign(w, 0.0);
  s.stddev.assign(w, 1.0);
  const double n = static_cast<double>(vectors.size());
  for (std::size_t d = 0; d < w; ++d) {
    double sum = 0.0;
    for (const auto& v : vectors) sum += v[d];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& v : vectors) ss += (v[d] - mean) * (v[d] - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[d] = mean;
    s.stddev[d] = sd < kStddevFloor ? 1.0 : sd;
  }
  return s;
}

std::vector<double> standardize(std::span<const double> v, const Standardizer& s) {
  if (v.size() != s.width()) {
    throw ShapeError("standardize: vector width " + std::to_string(v.size()) +
                     " does not match standardizer width " + std::to_string(s.width()));
  }
  std::vector<double> out(v.size());
  for (std::size_t d = 0; d < v.size(); ++d) out[d] = (v[d] - s.mean[d]) / s.stddev[d];
  return out;
}

std::vector<double> destandardize(std::span<const double> v, const Standardizer& s) {
  if (v.size() != s.width()) {
    throw ShapeError("destandardize: vector width " + std::to_string(v.size()) +
                     " does not match standardizer width " + std::to_string(s.width()));
  }
  std::vector<double> out(v.size());
  for (std::size_t d = 0; d < v.size(); ++d) out[d] = v[d] * s.stddev[d] + s.mean[d];
  return out;
}

}  // namespace zeroshot::meta
