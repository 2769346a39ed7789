#include "zeroshot/infer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "zeroshot/error.hpp"
#include "zeroshot/metafeatures.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot::infer {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string tsv_number(double v) { return std::isnan(v) ? "absent" : text::format_double(v); }

std::string render_text(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      const std::size_t pad = width[c] - row[c].size();
      if (c == 0) {
        line += row[c] + std::string(pad, ' ');
      } else {
        line += std::string(pad, ' ') + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

struct Cell {
  std::vector<double> accuracy;
  std::vector<double> time;
};

struct Grid {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::map<std::pair<std::string, std::string>, Cell> cells;
};

Grid collect(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw DataError("no result rows to report");
  Grid g;
  for (const auto& r : rows) {
    if (std::find(g.methods.begin(), g.methods.end(), r.method) == g.methods.end())
      g.methods.push_back(r.method);
    if (std::find(g.datasets.begin(), g.datasets.end(), r.dataset) == g.datasets.end())
      g.datasets.push_back(r.dataset);
    auto& c = g.cells[{r.method, r.dataset}];
    if (r.accuracy) c.accuracy.push_back(*r.accuracy);
    c.time.push_back(r.time_seconds);
  }
  return g;
}

}  // namespace

Recommender::Recommender(Checkpoint checkpoint)
    : checkpoint_(std::move(checkpoint)), engine_(checkpoint_.engine()) {}

Recommendation Recommender::recommend(const DataTable& table, std::string_view description,
                                      std::string_view dataset_id) const {
  Query q;
  q.dataset_id = std::string(dataset_id);
  q.table = &table;
  q.description = std::string(description);
  return recommend(q);
}

Recommendation Recommender::recommend(const Query& query) const {
  const auto start = Clock::now();
  const Checkpoint& ck = checkpoint_;
  const auto& cfg = ck.model.config();
  const auto& ids = ck.graph.node_ids;
  if (std::find(ids.begin(), ids.end(), query.dataset_id) != ids.end()) {
    throw DataError("dataset '" + query.dataset_id +
                    "' is a training node of this checkpoint; recommend needs an unseen dataset");
  }

  Recommendation rec;
  rec.dataset_id = query.dataset_id;

  auto t = Clock::now();
  std::vector<double> meta_in;
  if (cfg.d_meta > 0) {
    std::vector<double> raw;
    if (query.meta) {
      raw = *query.meta;
    } else {
      if (!query.table) throw DataError("no table given for '" + query.dataset_id + "'");
      if (query.table->rows() == 0) throw DataError("table for '" + query.dataset_id + "' is empty");
      raw = meta::compute_metafeatures(*query.table, query.dataset_id).values;
    }
    if (raw.size() != ck.standardizer.width()) {
      throw DataError("dataset '" + query.dataset_id + "' has " + std::to_string(raw.size()) +
                      " meta-features, the checkpoint expects " +
                      std::to_string(ck.standardizer.width()));
    }
    meta_in = meta::standardize(raw, ck.standardizer);
  }
  rec.timings.metafeature_ms = ms_since(t);

  t = Clock::now();
  std::vector<double> desc_in;
  if (cfg.d_desc > 0) {
    if (query.description_embedding) {
      desc_in = *query.description_embedding;
    } else if (ck.provenance() == embed::Provenance::precomputed) {
      throw DataError("checkpoint was trained on precomputed description embeddings; dataset '" +
                      query.dataset_id + "' needs one");
    } else {
      desc_in = embed::hash_embed(query.description, cfg.d_desc, ck.embedding_seed);
    }
    if (desc_in.size() != cfg.d_desc) {
      throw DataError("description embedding of width " + std::to_string(desc_in.size()) +
                      ", the checkpoint expects " + std::to_string(cfg.d_desc));
    }
  }
  rec.timings.embed_ms = ms_since(t);

  t = Clock::now();
  const auto fused = model::fuse_dataset(ck.model, meta_in, desc_in);
  auto nbrs = graph::nearest_nodes(engine_.fused(), fused, cfg.k_neighbors);
  std::sort(nbrs.begin(), nbrs.end());
  rec.timings.attach_ms = ms_since(t);

  t = Clock::now();
  rec.logits = engine_.query_attached(fused, nbrs);
  rec.distribution = model::softmax_heads(rec.logits);
  rec.label = model::select_pipeline(rec.distribution);
  rec.timings.gnn_ms = ms_since(t);

  for (std::size_t j : nbrs) rec.neighbor_ids.push_back(ids[j]);
  rec.timings.total_ms = ms_since(start);
  return rec;
}

PhaseStats summarize(std::vector<double> samples) {
  if (samples.empty()) throw ConfigError("no samples to summarize");
  std::sort(samples.begin(), samples.end());
  PhaseStats s;
  s.median = median_of(samples);
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(samples.size());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

BenchSummary bench(const Recommender& r, const Query& query, std::size_t trials) {
  if (trials < kMinBenchTrials) {
    throw ConfigError("bench needs at least " + std::to_string(kMinBenchTrials) +
                      " trials, got " + std::to_string(trials));
  }
  BenchSummary s;
  s.trials = trials;
  s.last = r.recommend(query);
  std::vector<double> meta, emb, attach, gnn, total;
  for (std::size_t i = 0; i < trials; ++i) {
    s.last = r.recommend(query);
    meta.push_back(s.last.timings.metafeature_ms);
    emb.push_back(s.last.timings.embed_ms);
    attach.push_back(s.last.timings.attach_ms);
    gnn.push_back(s.last.timings.gnn_ms);
    total.push_back(s.last.timings.total_ms);
  }
  s.metafeature_ms = summarize(meta);
  s.embed_ms = summarize(emb);
  s.attach_ms = summarize(attach);
  s.gnn_ms = summarize(gnn);
  s.total_ms = summarize(total);
  return s;
}

std::string format_bench(const BenchSummary& s) {
  std::vector<std::vector<std::string>> cells = {{"phase", "median_ms", "mean_ms", "p95_ms"}};
  const std::pair<const char*, const PhaseStats*> phases[] = {
      {"metafeature", &s.metafeature_ms}, {"embed", &s.embed_ms}, {"attach", &s.attach_ms},
      {"gnn", &s.gnn_ms},                 {"total", &s.total_ms}};
  for (const auto& [name, p] : phases) {
    cells.push_back({name, fixed(p->median, 3), fixed(p->mean, 3), fixed(p->p95, 3)});
  }
  std::string out = "trials " + std::to_string(s.trials) + "\n";
  out += "load_ms " + fixed(s.load_ms, 3) + "\n";
  return out + render_text(cells);
}

std::string format_recommendations(const std::vector<Recommendation>& recs,
                                   const PrimitiveVocabulary& vocab) {
  std::string out;
  for (const auto& r : recs) {
    out += text::escape(r.dataset_id) + "\t" +
           vocab.feature_processors.at(r.label.feature_processor) + "\t" +
           vocab.estimators.at(r.label.estimator) + "\t" +
           text::format_double(r.distribution.p_feat.at(r.label.feature_processor)) + "\t" +
           text::format_double(r.distribution.p_est.at(r.label.estimator)) + "\n";
  }
  return out;
}

std::string format_results(const std::vector<ResultRow>& rows) {
  std::string out = "method\tdataset\taccuracy\ttime_seconds\n";
  for (const auto& r : rows) {
    out += text::escape(r.method) + "\t" + text::escape(r.dataset) + "\t" +
           (r.accuracy ? text::format_double(*r.accuracy) : std::string("absent")) + "\t" +
           text::format_double(r.time_seconds) + "\n";
  }
  return out;
}

std::vector<ResultRow> parse_results(std::string_view contents) {
  text::LineReader reader(contents);
  std::string_view line;
  std::vector<ResultRow> rows;
  while (reader.next(line)) {
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const std::size_t ln = reader.line_number();
    const auto f = text::split(trimmed, '\t');
    if (f.size() != 4) throw ParseError("expected 4 tab-separated fields", ln);
    if (f[0] == "method" && f[1] == "dataset") continue;
    ResultRow r;
    r.method = text::unescape(f[0], ln);
    r.dataset = text::unescape(f[1], ln);
    if (f[2] != "absent") {
      r.accuracy = text::parse_double(f[2], ln);
      if (!(*r.accuracy >= 0.0 && *r.accuracy <= 1.0)) {
        throw ParseError("accuracy must lie in [0, 1]", ln);
      }
    }
    r.time_seconds = text::parse_double(f[3], ln);
    if (!(r.time_seconds >= 0.0)) throw ParseError("time must be nonnegative", ln);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> load_results(const std::string& path) {
  try {
    return parse_results(text::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<Aggregate> aggregate(const std::vector<ResultRow>& rows) {
  const Grid g = collect(rows);
  std::vector<Aggregate> out;
  for (const auto& m : g.methods) {
    Aggregate a;
    a.method = m;
    std::vector<double> acc, time;
    for (const auto& d : g.datasets) {
      auto it = g.cells.find({m, d});
      if (it == g.cells.end()) continue;
      time.push_back(median_of(it->second.time));
      if (!it->second.accuracy.empty()) acc.push_back(median_of(it->second.accuracy));
    }
    a.datasets = acc.size();
    a.median_time = median_of(time);
    if (acc.empty()) {
      a.median = a.min = a.max = a.mean = a.std = std::numeric_limits<double>::quiet_NaN();
    } else {
      a.median = median_of(acc);
      a.min = *std::min_element(acc.begin(), acc.end());
      a.max = *std::max_element(acc.begin(), acc.end());
      double sum = 0.0;
      for (double v : acc) sum += v;
      a.mean = sum / static_cast<double>(acc.size());
      double ss = 0.0;
      for (double v : acc) ss += (v - a.mean) * (v - a.mean);
      a.std = std::sqrt(ss / static_cast<double>(acc.size()));
    }
    out.push_back(a);
  }
  return out;
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "tsv") return ReportFormat::tsv;
  if (s == "text") return ReportFormat::text;
  throw ConfigError("unknown report format '" + std::string(s) + "' (expected tsv or text)");
}

std::string emit_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  const Grid g = collect(rows);
  const auto aggs = aggregate(rows);
  const bool tsv = format == ReportFormat::tsv;
  auto num = [&](double v, int digits) { return tsv ? tsv_number(v) : fixed(v, digits); };

  std::vector<std::vector<std::string>> per = {{"dataset"}};
  for (const auto& m : g.methods) {
    per[0].push_back(m + " accuracy");
    per[0].push_back(m + " time_seconds");
  }
  for (const auto& d : g.datasets) {
    std::vector<std::string> row = {d};
    for (const auto& m : g.methods) {
      auto it = g.cells.find({m, d});
      if (it == g.cells.end()) {
        row.push_back(tsv ? "absent" : "-");
        row.push_back(tsv ? "absent" : "-");
        continue;
      }
      row.push_back(num(median_of(it->second.accuracy), 4));
      row.push_back(num(median_of(it->second.time), 4));
    }
    per.push_back(std::move(row));
  }

  std::vector<std::vector<std::string>> agg = {
      {"method", "Median", "Min", "Max", "Mean", "Std", "Median time"}};
  for (const auto& a : aggs) {
    agg.push_back({a.method, num(a.median, 4), num(a.min, 4), num(a.max, 4), num(a.mean, 4),
                   num(a.std, 4), num(a.median_time, 4)});
  }

  if (tsv) {
    auto join = [](const std::vector<std::vector<std::string>>& cells) {
      std::string out;
      for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "\t" : "") + text::escape(row[c]);
        out += "\n";
      }
      return out;
    };
    return "# per-dataset\n" + join(per) + "# aggregate\n" + join(agg);
  }
  return "Per-dataset accuracy (median across trials)\n\n" + render_text(per) +
         "\nAggregate accuracy and time (seconds)\n\n" + render_text(agg);
}

std::string method_label(const Checkpoint& ck) {
  return ck.ablation() + ":" + std::string(embed::to_string(ck.provenance()));
}

}  // namespace zeroshot::infer
