#include "zeroshot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "zeroshot/error.hpp"
#include "zeroshot/hash.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot::synthetic {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return unit_double(gen_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

struct ClusterSpec {
  const char* fp;
  const char* est;
  std::size_t numeric;
  std::size_t categorical;
  std::size_t classes;
  std::size_t min_rows;
  std::size_t max_rows;
  double missing;
  double skew;  // 0 gaussian, else exponential mixing weight
  std::size_t cardinality;
  double imbalance;  // probability mass of class 0 beyond uniform
  std::vector<const char*> words;
};

const std::vector<ClusterSpec>& clusters() {
  static const std::vector<ClusterSpec> specs = {
      {"standardscaler", "logisticregression", 8, 0, 2, 150, 240, 0.0, 0.0, 0, 0.0,
       {"patient", "clinical", "diagnosis", "hospital", "blood", "tumor", "medical", "treatment",
        "symptom", "disease", "cardiac", "therapy", "biopsy", "outcome", "cohort"}},
      {"robustscaler", "random_forest", 3, 5, 3, 100, 180, 0.08, 0.0, 6, 0.0,
       {"customer", "retail", "store", "purchase", "product", "basket", "price", "sales",
        "shopper", "discount", "inventory", "brand", "checkout", "loyalty", "invoice"}},
      {"pca", "k_nearest_neighbors", 20, 0, 5, 60, 120, 0.0, 1.0, 0, 0.0,
       {"sensor", "signal", "vibration", "frequency", "spectrum", "voltage", "device", "reading",
        "telemetry", "waveform", "amplitude", "channel", "sampling", "machine", "fault"}},
      {"selectfwe", "bernoulli_nb", 0, 6, 2, 120, 200, 0.02, 0.0, 12, 0.35,
       {"survey", "respondent", "opinion", "answer", "questionnaire", "vote", "poll", "census",
        "household", "attitude", "preference", "interview", "population", "region", "agree"}},
  };
  return specs;
}

const std::vector<const char*>& generic_words() {
  static const std::vector<const char*> words = {
      "data", "dataset", "collected", "records", "attributes", "class", "target", "study",
      "values", "measured", "instances", "features", "the", "of", "and", "from", "with",
      "each", "contains", "task", "classification", "predict", "information", "set"};
  return words;
}

std::string format_cell(double v) {
  // Six decimals keep files small and are plenty for the statistics.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

GeneratedDataset make_dataset(std::size_t cluster, const std::string& id, Split split, Rng& rng) {
  const ClusterSpec& spec = clusters()[cluster];
  const std::size_t rows = spec.min_rows + rng.index(spec.max_rows - spec.min_rows + 1);
  const std::size_t numeric = spec.numeric ? spec.numeric + rng.index(3) : 0;
  const std::size_t categorical = spec.categorical ? spec.categorical + rng.index(2) : 0;

  std::vector<std::string> header;
  for (std::size_t j = 0; j < numeric; ++j) header.push_back("x" + std::to_string(j));
  for (std::size_t j = 0; j < categorical; ++j) header.push_back("c" + std::to_string(j));
  header.push_back("class");

  std::vector<double> class_p(spec.classes, (1.0 - spec.imbalance) / static_cast<double>(spec.classes));
  class_p[0] += spec.imbalance;

  std::vector<std::vector<std::string>> cells(rows);
  std::vector<std::size_t> y(rows);
  // Each class is used at least once so the table is valid.
  for (std::size_t r = 0; r < rows; ++r) {
    if (r < spec.classes) {
      y[r] = r;
      continue;
    }
    double u = rng.uniform(), cum = 0.0;
    y[r] = spec.classes - 1;
    for (std::size_t k = 0; k < spec.classes; ++k) {
      cum += class_p[k];
      if (u < cum) {
        y[r] = k;
        break;
      }
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    auto& row = cells[r];
    const double shift = static_cast<double>(y[r]);
    for (std::size_t j = 0; j < numeric; ++j) {
      double v;
      if (spec.skew > 0.0) {
        v = -std::log(1.0 - rng.uniform()) * (1.0 + 0.3 * shift) + 0.1 * rng.normal();
      } else {
        v = rng.normal() + (j < 2 ? shift : 0.0);
      }
      row.push_back(rng.uniform() < spec.missing ? "?" : format_cell(v));
    }
    for (std::size_t j = 0; j < categorical; ++j) {
      std::size_t level = rng.index(spec.cardinality);
      if (j == 0 && rng.uniform() < 0.6) level = y[r] % spec.cardinality;
      row.push_back(rng.uniform() < spec.missing ? "?" : "v" + std::to_string(level));
    }
    row.push_back("k" + std::to_string(y[r]));
  }

  std::string description;
  const std::size_t tokens = 20 + rng.index(15);
  for (std::size_t t = 0; t < tokens; ++t) {
    const auto& list = rng.uniform() < 0.6 ? spec.words : generic_words();
    if (t) description += ' ';
    description += list[rng.index(list.size())];
  }

  GeneratedDataset d;
  d.id = id;
  d.split = split;
  d.cluster = cluster;
  d.table = DataTable::from_cells(std::move(header), cells);
  d.description = std::move(description);
  return d;
}

}  // namespace

Universe generate(const UniverseConfig& config, const PrimitiveVocabulary& vocab) {
  Universe u;
  for (const auto& spec : clusters()) u.cluster_labels.push_back(vocab.label(spec.fp, spec.est));
  Rng rng(mix64(config.seed ^ 0x756e6976));
  const std::size_t total = config.train + config.test;
  for (std::size_t i = 0; i < total; ++i) {
    const Split split = i < config.train ? Split::train : Split::test;
    const std::size_t cluster = i % kClusters;
    char id[32];
    std::snprintf(id, sizeof id, "syn%03zu", i);
    u.datasets.push_back(make_dataset(cluster, id, split, rng));

    const PipelineLabel best = u.cluster_labels[cluster];
    const double top = rng.uniform(0.80, 0.95);
    PipelineLabel other;
    do {
      other = {rng.index(vocab.feature_processors.size()), rng.index(vocab.estimators.size())};
    } while (other == best);
    const bool best_from_o = rng.uniform() < 0.5;
    const double runner_up = top - rng.uniform(0.02, 0.15);
    u.performance.push_back({id, best_from_o ? Source::O : Source::S, best, top});
    u.performance.push_back({id, best_from_o ? Source::S : Source::O, other, runner_up});
  }
  return u;
}

std::string write_universe(const Universe& universe, const PrimitiveVocabulary& vocab,
                           const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "tables");
  fs::create_directories(fs::path(dir) / "descriptions");
  std::string manifest = "# id\tsplit\ttable\ttarget\tdescription\n";
  for (const auto& d : universe.datasets) {
    const std::string table = "tables/" + d.id + ".csv";
    const std::string desc = "descriptions/" + d.id + ".txt";
    text::write_file_atomic((fs::path(dir) / table).string(), d.table.to_csv());
    text::write_file_atomic((fs::path(dir) / desc).string(), d.description + "\n");
    manifest += d.id + "\t" + std::string(to_string(d.split)) + "\t" + table + "\tclass\t" + desc +
                "\n";
  }
  std::string perf = "dataset_id\tsource\tfeature_processor\testimator\taccuracy\n";
  for (const auto& r : universe.performance) {
    perf += r.dataset_id + "\t" + std::string(to_string(r.source)) + "\t" +
            vocab.feature_processors[r.pipeline.feature_processor] + "\t" +
            vocab.estimators[r.pipeline.estimator] + "\t" + text::format_double(r.accuracy) + "\n";
  }
  const std::string manifest_path = (fs::path(dir) / "manifest.tsv").string();
  text::write_file_atomic(manifest_path, manifest);
  text::write_file_atomic((fs::path(dir) / "performance.tsv").string(), perf);
  return manifest_path;
}

DataTable random_table(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < 2 || cols < 1) throw ConfigError("random_table needs rows >= 2 and cols >= 1");
  Rng rng(mix64(seed));
  std::vector<std::string> header;
  for (std::size_t j = 0; j < cols; ++j) header.push_back("x" + std::to_string(j));
  header.push_back("class");
  std::vector<std::vector<std::string>> cells(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double first = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = rng.normal();
      if (j == 0) first = v;
      cells[r].push_back(format_cell(v));
    }
    cells[r].push_back(r < 2 ? (r == 0 ? "a" : "b") : (first + 0.5 * rng.normal() > 0 ? "a" : "b"));
  }
  return DataTable::from_cells(std::move(header), cells);
}

}  // namespace zeroshot::synthetic
