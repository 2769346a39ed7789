// zeroshot: command-line front end for preprocessing, training, recommending,
// evaluating, benchmarking and reporting.

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zeroshot/catalog.hpp"
#include "zeroshot/checkpoint.hpp"
#include "zeroshot/error.hpp"
#include "zeroshot/infer.hpp"
#include "zeroshot/metafeatures.hpp"
#include "zeroshot/synthetic.hpp"
#include "zeroshot/table.hpp"
#include "zeroshot/text_io.hpp"
#include "zeroshot/trainer.hpp"

namespace {

using namespace zeroshot;
using Clock = std::chrono::steady_clock;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::string config_path;
  std::string ablation;
};

struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
  std::string ablation = "ZS";
};

// Flat JSON object; command-line flags override it.
RunConfig load_run_config(const Globals& g) {
  RunConfig rc;
  if (!g.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text::read_file(g.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(g.config_path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(g.config_path + ": expected a JSON object");
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "d_fused") rc.model.d_fused = v.get<std::size_t>();
        else if (key == "d_node") rc.model.d_node = v.get<std::size_t>();
        else if (key == "gat_layers") rc.model.gat_layers = v.get<std::size_t>();
        else if (key == "gat_hidden") rc.model.gat_hidden = v.get<std::size_t>();
        else if (key == "leaky_slope") rc.model.leaky_slope = v.get<double>();
        else if (key == "k_neighbors" || key == "k") rc.model.k_neighbors = v.get<std::size_t>();
        else if (key == "iterations") rc.train.iterations = v.get<std::size_t>();
        else if (key == "graph_rebuild_every") rc.train.graph_rebuild_every = v.get<std::size_t>();
        else if (key == "lr") rc.train.adam.lr = v.get<double>();
        else if (key == "beta1") rc.train.adam.beta1 = v.get<double>();
        else if (key == "beta2") rc.train.adam.beta2 = v.get<double>();
        else if (key == "eps") rc.train.adam.eps = v.get<double>();
        else if (key == "eval_every") rc.train.eval_every = v.get<std::size_t>();
        else if (key == "early_stop_patience") rc.train.early_stop_patience = v.get<std::size_t>();
        else if (key == "seed") rc.train.seed = v.get<std::uint64_t>();
        else if (key == "ablation") rc.ablation = v.get<std::string>();
        else throw ConfigError(g.config_path + ": unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(g.config_path + ": " + e.what());
    }
  }
  if (g.seed) rc.train.seed = *g.seed;
  if (g.k) rc.model.k_neighbors = *g.k;
  if (!g.ablation.empty()) rc.ablation = g.ablation;
  return rc;
}

void write_output(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    text::write_file_atomic(path, contents);
  }
}

std::string probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

void print_recommendation(const infer::Recommendation& r, const PrimitiveVocabulary& vocab) {
  const auto& d = r.distribution;
  std::cout << "dataset\t" << r.dataset_id << "\n";
  std::cout << "pipeline\t" << vocab.describe(r.label) << "\n";
  std::cout << "feature_processor\t" << vocab.feature_processors[r.label.feature_processor] << "\t"
            << probability(d.p_feat[r.label.feature_processor]) << "\n";
  std::cout << "estimator\t" << vocab.estimators[r.label.estimator] << "\t"
            << probability(d.p_est[r.label.estimator]) << "\n";
  std::cout << "p_feat";
  for (std::size_t i = 0; i < d.p_feat.size(); ++i)
    std::cout << "\t" << vocab.feature_processors[i] << "=" << probability(d.p_feat[i]);
  std::cout << "\np_est";
  for (std::size_t i = 0; i < d.p_est.size(); ++i)
    std::cout << "\t" << vocab.estimators[i] << "=" << probability(d.p_est[i]);
  std::cout << "\nneighbors";
  for (const auto& id : r.neighbor_ids) std::cout << "\t" << id;
  const auto& t = r.timings;
  std::printf("\ntimings_ms\tmetafeature=%.3f\tembed=%.3f\tattach=%.3f\tgnn=%.3f\ttotal=%.3f\n",
              t.metafeature_ms, t.embed_ms, t.attach_ms, t.gnn_ms, t.total_ms);
}

struct QueryArgs {
  std::string table, target, description, id = "new_dataset", meta, embeddings, embedding_id;
};

void add_query_options(CLI::App* cmd, QueryArgs& q) {
  cmd->add_option("--table", q.table, "Delimited table of the new dataset")->check(CLI::ExistingFile);
  cmd->add_option("--target", q.target, "Target column name or index (default: last)");
  cmd->add_option("--description", q.description, "Text file describing the dataset")
      ->check(CLI::ExistingFile);
  cmd->add_option("--id", q.id, "Dataset id");
  cmd->add_option("--meta", q.meta, "Raw meta-feature vector file instead of computing one")
      ->check(CLI::ExistingFile);
  cmd->add_option("--embeddings", q.embeddings, "ZSEMB file holding the description embedding")
      ->check(CLI::ExistingFile);
  cmd->add_option("--embedding-id", q.embedding_id, "Record id in --embeddings (default: --id)");
}

// Owns the table so the query's pointer stays valid.
struct LoadedQuery {
  std::optional<DataTable> table;
  infer::Query query;
};

LoadedQuery load_query(const QueryArgs& a, const Checkpoint& ck) {
  LoadedQuery lq;
  lq.query.dataset_id = a.id;
  if (!a.table.empty()) {
    lq.table = load_table(a.table, a.target);
    lq.query.table = &*lq.table;
  }
  if (!a.description.empty()) lq.query.description = text::read_file(a.description);
  if (!a.meta.empty()) lq.query.meta = load_meta_vector(a.meta);
  if (!a.embeddings.empty()) {
    const auto store = embed::load_embeddings(a.embeddings, ck.model.config().d_desc);
    const auto v = store.at(a.embedding_id.empty() ? a.id : a.embedding_id);
    lq.query.description_embedding = std::vector<double>(v.begin(), v.end());
  }
  if (!lq.query.table && !lq.query.meta && ck.model.config().d_meta > 0) {
    throw ConfigError("--table or --meta is required");
  }
  return lq;
}

int run(int argc, char** argv) {
  CLI::App app{"Zero-shot pipeline recommendation over a graph of datasets", "zeroshot"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--k", g.k, "Neighbours per node in the dataset graph");
  app.add_option("--config", g.config_path, "JSON file with model and training settings")
      ->check(CLI::ExistingFile);
  app.add_option("--ablation", g.ablation, "ZS, ZSND (no description) or OnlyDesc (no meta-features)")
      ->check(CLI::IsMember({"ZS", "ZSND", "OnlyDesc"}));

  // preprocess
  std::string manifest, labels, catalog_out, embeddings_in;
  std::size_t width = embed::kDefaultWidth;
  auto* pre = app.add_subcommand("preprocess", "Meta-features, embeddings and labels into a catalog");
  pre->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  pre->add_option("--labels", labels, "Performance records")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", catalog_out, "Catalog file to write")->required();
  pre->add_option("--embeddings", embeddings_in, "Precomputed ZSEMB embeddings")
      ->check(CLI::ExistingFile);
  pre->add_option("--width", width, "Hashed embedding width")->check(CLI::PositiveNumber);

  // train
  std::string catalog_in, checkpoint_out, log_out;
  std::optional<std::size_t> iterations, rebuild_every, eval_every, patience;
  std::optional<double> lr;
  auto* tr = app.add_subcommand("train", "Train a model on a catalog");
  tr->add_option("--catalog", catalog_in, "Catalog file")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", checkpoint_out, "Checkpoint file to write (default model.ckpt)");
  tr->add_option("--iterations", iterations, "Backprop iterations");
  tr->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--rebuild-every", rebuild_every, "Steps between dataset graph rebuilds");
  tr->add_option("--eval-every", eval_every, "Steps between held-out evaluations (0 = off)");
  tr->add_option("--patience", patience, "Evaluations without improvement before stopping (0 = off)");
  tr->add_option("--log", log_out, "Training log file");

  // recommend
  std::string checkpoint_in, recs_out;
  QueryArgs qa;
  auto* rec = app.add_subcommand("recommend", "Recommend a pipeline for a new dataset");
  rec->add_option("--checkpoint", checkpoint_in, "Checkpoint file")->required()->check(CLI::ExistingFile);
  add_query_options(rec, qa);
  rec->add_option("--out", recs_out, "Append-free recommendations file for the harness");

  // eval
  std::size_t trials = 1;
  std::string results_out, method;
  auto* ev = app.add_subcommand("eval", "Label agreement on the catalog's test split");
  ev->add_option("--checkpoint", checkpoint_in, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--catalog", catalog_in, "Catalog file")->required()->check(CLI::ExistingFile);
  ev->add_option("--trials", trials, "Timing repetitions per dataset")->check(CLI::PositiveNumber);
  ev->add_option("--out", results_out, "Results file (method, dataset, accuracy, time)");
  ev->add_option("--recommendations", recs_out, "Recommendations file for the harness");
  ev->add_option("--method", method, "Method label (default <ablation>:<embedder>)");

  // bench
  std::size_t bench_trials = 100;
  auto* be = app.add_subcommand("bench", "Recommendation latency by phase");
  be->add_option("--checkpoint", checkpoint_in, "Checkpoint file")->required()->check(CLI::ExistingFile);
  add_query_options(be, qa);
  be->add_option("--trials", bench_trials, "Timed repetitions (at least 10)");

  // report
  std::vector<std::string> result_files;
  std::string format = "text", report_out;
  auto* rep = app.add_subcommand("report", "Per-dataset and aggregate tables from result files");
  rep->add_option("--results", result_files, "Result files")->required()->check(CLI::ExistingFile);
  rep->add_option("--format", format, "text or tsv")->check(CLI::IsMember({"text", "tsv"}));
  rep->add_option("--out", report_out, "Report file (default stdout)");

  // graph dump
  std::string graph_format = "edges";
  auto* gr = app.add_subcommand("graph", "Dataset graph tools");
  gr->require_subcommand(1);
  auto* dump = gr->add_subcommand("dump", "Print the training graph of a checkpoint");
  dump->add_option("--checkpoint", checkpoint_in, "Checkpoint file")->required()->check(CLI::ExistingFile);
  dump->add_option("--format", graph_format, "edges or adjacency")
      ->check(CLI::IsMember({"edges", "adjacency"}));

  // metafeatures
  std::string mf_table, mf_target, mf_id;
  auto* mf = app.add_subcommand("metafeatures", "Print the meta-feature vector of a table");
  mf->add_option("--table", mf_table, "Delimited table")->required()->check(CLI::ExistingFile);
  mf->add_option("--target", mf_target, "Target column name or index (default: last)");
  mf->add_option("--id", mf_id, "Dataset id (seeds landmarker subsampling)");

  // synth
  std::string synth_out;
  synthetic::UniverseConfig uc;
  auto* sy = app.add_subcommand("synth", "Write a generated universe of datasets");
  sy->add_option("--out", synth_out, "Output directory")->required();
  sy->add_option("--train", uc.train, "Training datasets");
  sy->add_option("--test", uc.test, "Test datasets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (*pre) {
    Catalog cat = load_manifest(manifest);
    if (const auto missing = missing_tables(cat); !missing.empty()) {
      std::string list;
      for (const auto& id : missing) list += " " + id;
      throw DataError("missing table files for:" + list);
    }
    std::optional<embed::EmbeddingStore> store;
    if (!embeddings_in.empty()) store = embed::load_embeddings(embeddings_in, width);
    FeatureOptions opts;
    opts.embedding_width = width;
    opts.seed = g.seed.value_or(0);
    opts.precomputed = store ? &*store : nullptr;
    compute_features(cat, opts);
    const auto unlabeled = attach_labels(cat, load_performance(labels, cat.vocabulary));
    for (const auto& id : unlabeled)
      std::cerr << "warning: training dataset " << id << " has no performance records\n";
    save_catalog(cat, catalog_out);
    std::cout << "catalog\t" << catalog_out << "\ttrain=" << cat.count(Split::train)
              << "\ttest=" << cat.count(Split::test) << "\tunlabeled=" << unlabeled.size()
              << "\tembedder=" << embed::to_string(cat.provenance()) << "\n";
    return 0;
  }

  if (*tr) {
    RunConfig rc = load_run_config(g);
    if (iterations) rc.train.iterations = *iterations;
    if (lr) rc.train.adam.lr = *lr;
    if (rebuild_every) rc.train.graph_rebuild_every = *rebuild_every;
    if (eval_every) rc.train.eval_every = *eval_every;
    if (patience) rc.train.early_stop_patience = *patience;
    const Catalog cat = load_catalog(catalog_in);
    const auto mc = train::config_for(cat, rc.ablation, rc.model);
    std::string log = "step\tloss\tfeat_acc\test_acc\tjoint_acc\n";
    auto result = train::train(cat, mc, rc.train, [&](const train::LogEntry& e) {
      log += train::format_log_line(e) + "\n";
      if (e.eval) std::cerr << train::format_log_line(e) << "\n";
    });
    for (const auto& id : result.excluded)
      std::cerr << "warning: skipped unlabeled training dataset " << id << "\n";
    const std::string out = checkpoint_out.empty() ? "model.ckpt" : checkpoint_out;
    save_checkpoint(result.checkpoint, out);
    if (!log_out.empty()) text::write_file_atomic(log_out, log);
    std::cout << "checkpoint\t" << out << "\tablation=" << result.checkpoint.ablation()
              << "\titerations=" << result.checkpoint.iteration
              << "\tnodes=" << result.checkpoint.graph.size() << "\n";
    return 0;
  }

  if (*rec || *be) {
    const auto t0 = Clock::now();
    Checkpoint ck = load_checkpoint(checkpoint_in);
    if (g.k) throw ConfigError("--k is fixed by the checkpoint");
    const infer::Recommender r(std::move(ck));
    const double load_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    const auto lq = load_query(qa, r.checkpoint());
    if (*rec) {
      const auto result = r.recommend(lq.query);
      print_recommendation(result, r.checkpoint().vocabulary);
      if (!recs_out.empty()) {
        text::write_file_atomic(recs_out,
                                infer::format_recommendations({result}, r.checkpoint().vocabulary));
      }
      return 0;
    }
    auto summary = infer::bench(r, lq.query, bench_trials);
    summary.load_ms = load_ms;
    std::cout << "checkpoint\t" << checkpoint_in << "\tnodes=" << r.checkpoint().graph.size()
              << "\tablation=" << r.checkpoint().ablation() << "\n";
    std::cout << infer::format_bench(summary);
    return 0;
  }

  if (*ev) {
    const infer::Recommender r(load_checkpoint(checkpoint_in));
    const Catalog cat = load_catalog(catalog_in);
    const auto& ck = r.checkpoint();
    const std::string label = method.empty() ? infer::method_label(ck) : method;
    std::vector<infer::ResultRow> rows;
    std::vector<infer::Recommendation> recs;
    std::size_t joint = 0, feat = 0, est = 0, scored = 0;
    for (const auto& d : cat.datasets) {
      if (d.split != Split::test) continue;
      infer::Query q;
      q.dataset_id = d.id;
      q.meta = d.meta;
      q.description_embedding = d.desc_embedding;
      infer::Recommendation last;
      std::vector<double> times;
      for (std::size_t t = 0; t < trials; ++t) {
        last = r.recommend(q);
        times.push_back(last.timings.total_ms / 1000.0);
      }
      recs.push_back(last);
      std::optional<double> acc;
      if (d.best_label) {
        acc = last.label == *d.best_label ? 1.0 : 0.0;
        ++scored;
        joint += last.label == *d.best_label;
        feat += last.label.feature_processor == d.best_label->feature_processor;
        est += last.label.estimator == d.best_label->estimator;
      }
      for (double s : times) rows.push_back({label, d.id, acc, s});
    }
    if (recs.empty()) throw DataError("catalog has no test datasets");
    if (!results_out.empty()) text::write_file_atomic(results_out, infer::format_results(rows));
    if (!recs_out.empty()) {
      text::write_file_atomic(recs_out, infer::format_recommendations(recs, ck.vocabulary));
    }
    std::cout << "method\t" << label << "\ttest=" << recs.size() << "\tlabeled=" << scored;
    if (scored) {
      const double n = static_cast<double>(scored);
      std::cout << "\tjoint_acc=" << text::format_double(joint / n)
                << "\tfeat_acc=" << text::format_double(feat / n)
                << "\test_acc=" << text::format_double(est / n);
    }
    std::cout << "\n";
    return 0;
  }

  if (*rep) {
    std::vector<infer::ResultRow> rows;
    for (const auto& f : result_files) {
      auto part = infer::load_results(f);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    write_output(report_out, infer::emit_report(rows, infer::report_format_from_string(format)));
    return 0;
  }

  if (*dump) {
    const Checkpoint ck = load_checkpoint(checkpoint_in);
    const auto& gr_ = ck.graph;
    if (graph_format == "edges") {
      std::cout << graph::format_edges(gr_);
    } else {
      for (std::size_t i = 0; i < gr_.size(); ++i) {
        std::cout << gr_.node_ids[i];
        for (std::size_t j : gr_.adjacency[i]) std::cout << "\t" << gr_.node_ids[j];
        std::cout << "\n";
      }
    }
    return 0;
  }

  if (*mf) {
    const DataTable t = load_table(mf_table, mf_target);
    const auto v = meta::compute_metafeatures(t, mf_id);
    const auto& names = meta::registry_names();
    for (std::size_t i = 0; i < v.values.size(); ++i)
      std::cout << names[i] << "\t" << text::format_double(v.values[i]) << "\n";
    std::cerr << "imputed\t" << v.imputed << "\n";
    return 0;
  }

  if (*sy) {
    uc.seed = g.seed.value_or(0);
    const auto vocab = PrimitiveVocabulary::standard();
    const auto universe = synthetic::generate(uc, vocab);
    const auto path = synthetic::write_universe(universe, vocab, synth_out);
    std::cout << "manifest\t" << path << "\tdatasets=" << universe.datasets.size() << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const zeroshot::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
