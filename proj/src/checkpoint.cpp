#include "zeroshot/checkpoint.hpp"

#include <algorithm>
#include <map>

#include "format_util.hpp"
#include "zeroshot/error.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot {

namespace {

constexpr std::string_view kMagic = "ZSCKPT";
constexpr std::string_view kVersion = "1";

using detail::append_vector;
using detail::expect_key;
using detail::fields_of;
using detail::parse_vector;

struct ConfigField {
  const char* key;
  std::size_t model::ModelConfig::*field;
};

constexpr ConfigField kConfigFields[] = {
    {"d_meta", &model::ModelConfig::d_meta},
    {"d_desc", &model::ModelConfig::d_desc},
    {"d_pipe", &model::ModelConfig::d_pipe},
    {"d_fused", &model::ModelConfig::d_fused},
    {"d_node", &model::ModelConfig::d_node},
    {"gat_layers", &model::ModelConfig::gat_layers},
    {"gat_hidden", &model::ModelConfig::gat_hidden},
    {"n_feature_processors", &model::ModelConfig::n_feature_processors},
    {"n_estimators", &model::ModelConfig::n_estimators},
    {"k_neighbors", &model::ModelConfig::k_neighbors},
};

std::map<std::string_view, std::string_view> key_values(std::string_view rest, std::size_t line) {
  std::map<std::string_view, std::string_view> kv;
  for (auto f : text::split(rest, '\t')) {
    const auto eq = f.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line);
    kv[f.substr(0, eq)] = f.substr(eq + 1);
  }
  return kv;
}

std::string_view lookup(const std::map<std::string_view, std::string_view>& kv,
                        std::string_view key, std::size_t line) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("missing '" + std::string(key) + "'", line);
  return it->second;
}

}  // namespace

Matrix Checkpoint::pipeline_matrix() const {
  const std::size_t w = primitive_docs.width();
  Matrix p(labels.size(), 2 * w);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto v = embed::embed_pipeline(labels[i], vocabulary, primitive_docs);
    std::copy(v.begin(), v.end(), p.row(i).data());
  }
  return p;
}

model::InferenceEngine Checkpoint::engine() const {
  return model::InferenceEngine(model, graph.reps, pipeline_matrix(), graph.adjacency);
}

std::string format_checkpoint(const Checkpoint& ck) {
  const auto& cfg = ck.model.config();
  std::string out;
  out += std::string(kMagic) + " " + std::string(kVersion) + "\n";
  out += "config";
  for (const auto& f : kConfigFields) out += "\t" + std::string(f.key) + "=" + std::to_string(cfg.*f.field);
  out += "\tleaky_slope=" + text::format_double(cfg.leaky_slope) + "\n";
  out += "provenance\tseed=" + std::to_string(ck.seed) +
         "\titeration=" + std::to_string(ck.iteration) +
         "\tembedder=" + std::string(embed::to_string(ck.provenance())) +
         "\tablation=" + ck.ablation() + "\n";
  detail::append_vocabulary(out, ck.vocabulary);
  detail::append_names(out, "meta_names", ck.meta_names);
  out += "standardizer\t" + std::to_string(ck.standardizer.width()) + "\n";
  out += "mean\t";
  append_vector(out, ck.standardizer.mean);
  out += "\nstddev\t";
  append_vector(out, ck.standardizer.stddev);
  out += "\n";
  detail::append_docs(out, ck.primitive_docs, ck.embedding_seed);

  const auto& g = ck.graph;
  out += "graph\t" + std::to_string(g.size()) + "\t" + std::to_string(g.reps.cols()) + "\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    out += "node\t" + text::escape(g.node_ids[i]) + "\t" +
           text::escape(ck.vocabulary.feature_processors.at(ck.labels[i].feature_processor)) +
           "\t" + text::escape(ck.vocabulary.estimators.at(ck.labels[i].estimator)) + "\t";
    for (std::size_t a = 0; a < g.adjacency[i].size(); ++a) {
      if (a) out += ' ';
      out += std::to_string(g.adjacency[i][a]);
    }
    out += "\t";
    append_vector(out, g.reps.row(i));
    out += "\n";
  }

  const auto params = ck.model.parameters();
  out += "params\t" + std::to_string(params.size()) + "\n";
  for (const auto* p : params) {
    out += "param\t" + p->name + "\t" + std::to_string(p->value.rows()) + "\t" +
           std::to_string(p->value.cols()) + "\t";
    append_vector(out, p->value.values());
    out += "\n";
  }
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view contents) {
  text::LineReader reader(contents);
  std::string_view line;
  if (!reader.next(line)) throw ParseError("empty checkpoint file");
  {
    const auto head = text::split_ws(line);
    if (head.size() != 2 || head[0] != kMagic) {
      throw ParseError("not a checkpoint file (missing ZSCKPT header)", 1);
    }
    if (head[1] != kVersion) {
      throw ParseError("checkpoint version " + std::string(head[1]) +
                           " is not supported (this build reads version " + std::string(kVersion) +
                           ")",
                       1);
    }
  }

  Checkpoint ck;
  model::ModelConfig cfg;
  {
    const auto kv = key_values(expect_key(reader, "config"), reader.line_number());
    const std::size_t ln = reader.line_number();
    for (const auto& f : kConfigFields) cfg.*f.field = text::parse_uint(lookup(kv, f.key, ln), ln);
    cfg.leaky_slope = text::parse_double(lookup(kv, "leaky_slope", ln), ln);
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), ln);
    }
  }
  std::string ablation, embedder;
  {
    const auto kv = key_values(expect_key(reader, "provenance"), reader.line_number());
    const std::size_t ln = reader.line_number();
    ck.seed = text::parse_uint(lookup(kv, "seed", ln), ln);
    ck.iteration = text::parse_uint(lookup(kv, "iteration", ln), ln);
    embedder = std::string(lookup(kv, "embedder", ln));
    ablation = std::string(lookup(kv, "ablation", ln));
  }
  ck.vocabulary = detail::read_vocabulary(reader);
  ck.meta_names = detail::read_names(reader, "meta_names");
  {
    const auto f = fields_of(expect_key(reader, "standardizer"), 1, reader.line_number());
    const auto w = text::parse_uint(f[0], reader.line_number());
    ck.standardizer.mean = parse_vector(expect_key(reader, "mean"), w, reader.line_number());
    ck.standardizer.stddev = parse_vector(expect_key(reader, "stddev"), w, reader.line_number());
  }
  ck.primitive_docs = detail::read_docs(reader, ck.embedding_seed);
  if (std::string(embed::to_string(ck.provenance())) != embedder) {
    throw DataError("provenance line says embedder " + embedder + " but docs say " +
                    std::string(embed::to_string(ck.provenance())));
  }
  {
    const auto f = fields_of(expect_key(reader, "graph"), 2, reader.line_number());
    const auto n = text::parse_uint(f[0], reader.line_number());
    const auto width = text::parse_uint(f[1], reader.line_number());
    auto& g = ck.graph;
    g.reps = Matrix(n, width);
    g.adjacency.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto h = fields_of(expect_key(reader, "node"), 5, reader.line_number());
      const std::size_t ln = reader.line_number();
      g.node_ids.push_back(text::unescape(h[0], ln));
      ck.labels.push_back(
          ck.vocabulary.label(text::unescape(h[1], ln), text::unescape(h[2], ln)));
      for (auto tok : text::split_ws(h[3])) {
        const auto j = text::parse_uint(tok, ln);
        if (j >= n) throw ParseError("adjacency index out of range", ln);
        g.adjacency[i].push_back(j);
      }
      const auto rep = parse_vector(h[4], width, ln);
      std::copy(rep.begin(), rep.end(), g.reps.row(i).data());
    }
    if (!g.is_symmetric()) throw DataError("checkpoint graph adjacency is not symmetric");
  }

  ck.model = model::ZeroShotModel(cfg, 0);
  if (ck.ablation() != ablation) {
    throw DataError("checkpoint says ablation " + ablation + " but its config implies " +
                    ck.ablation());
  }
  if (cfg.n_feature_processors != ck.vocabulary.feature_processors.size() ||
      cfg.n_estimators != ck.vocabulary.estimators.size()) {
    throw DataError("head widths in config do not match the vocabulary");
  }
  {
    const auto params = ck.model.parameters();
    const auto f = fields_of(expect_key(reader, "params"), 1, reader.line_number());
    const auto n = text::parse_uint(f[0], reader.line_number());
    if (n != params.size()) {
      throw DataError("checkpoint holds " + std::to_string(n) + " tensors, config implies " +
                      std::to_string(params.size()));
    }
    for (auto* p : params) {
      const auto h = fields_of(expect_key(reader, "param"), 4, reader.line_number());
      const std::size_t ln = reader.line_number();
      if (h[0] != p->name) {
        throw DataError("expected tensor " + p->name + ", found " + std::string(h[0]));
      }
      const auto rows = text::parse_uint(h[1], ln);
      const auto cols = text::parse_uint(h[2], ln);
      if (rows != p->value.rows() || cols != p->value.cols()) {
        throw ShapeError("tensor " + p->name + " has shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", config expects " + p->value.shape_string());
      }
      const auto values = parse_vector(h[3], p->value.size(), ln);
      std::copy(values.begin(), values.end(), p->value.data());
    }
  }
  expect_key(reader, "end");
  while (reader.next(line)) {
    if (!text::trim(line).empty()) {
      throw ParseError("trailing content after end", reader.line_number());
    }
  }
  if (ck.standardizer.width() != cfg.d_meta && cfg.d_meta != 0) {
    throw DataError("standardizer width " + std::to_string(ck.standardizer.width()) +
                    " does not match d_meta " + std::to_string(cfg.d_meta));
  }
  if (ck.graph.reps.cols() != cfg.d_fused) throw DataError("graph reps width does not match d_fused");
  if (2 * ck.primitive_docs.width() != cfg.d_pipe) {
    throw DataError("doc embedding width does not match d_pipe");
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  text::write_file_atomic(path, format_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::string& path) {
  try {
    return parse_checkpoint(text::read_file(path));
  } catch (...) {
    detail::rethrow_with_path(path);
  }
}

}  // namespace zeroshot
