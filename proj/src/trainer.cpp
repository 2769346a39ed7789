#include "zeroshot/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "zeroshot/error.hpp"
#include "zeroshot/hash.hpp"
#include "zeroshot/text_io.hpp"

namespace zeroshot::train {

namespace {

constexpr std::uint64_t kModelStream = 0x6d6f64656c;  // "model"
constexpr std::uint64_t kStepStream = 0x73746570;     // "step"

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (graph_rebuild_every < 1) throw ConfigError("graph_rebuild_every must be at least 1");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

model::ModelConfig config_for(const Catalog& catalog, std::string_view ablation,
                              const model::ModelConfig& base) {
  model::ModelConfig cfg = base;
  cfg.d_meta = catalog.meta_names.size();
  cfg.d_desc = catalog.embedding_width();
  cfg.d_pipe = 2 * catalog.embedding_width();
  cfg.n_feature_processors = catalog.vocabulary.feature_processors.size();
  cfg.n_estimators = catalog.vocabulary.estimators.size();
  if (ablation == "ZSND") {
    cfg.d_desc = 0;
  } else if (ablation == "OnlyDesc") {
    cfg.d_meta = 0;
  } else if (ablation != "ZS") {
    throw ConfigError("unknown ablation '" + std::string(ablation) +
                      "' (expected ZS, ZSND or OnlyDesc)");
  }
  cfg.validate();
  return cfg;
}

std::vector<double> meta_input(const DatasetRecord& d, const meta::Standardizer& s,
                               const model::ModelConfig& config) {
  if (config.d_meta == 0) return {};
  if (!d.meta) throw DataError("dataset '" + d.id + "' has no meta-features");
  if (d.meta->size() != config.d_meta) {
    throw DataError("dataset '" + d.id + "' has " + std::to_string(d.meta->size()) +
                    " meta-features, the model expects " + std::to_string(config.d_meta));
  }
  return meta::standardize(*d.meta, s);
}

std::vector<double> desc_input(const DatasetRecord& d, const model::ModelConfig& config) {
  if (config.d_desc == 0) return {};
  if (!d.desc_embedding) throw DataError("dataset '" + d.id + "' has no description embedding");
  if (d.desc_embedding->size() != config.d_desc) {
    throw DataError("dataset '" + d.id + "' has a description embedding of width " +
                    std::to_string(d.desc_embedding->size()) + ", the model expects " +
                    std::to_string(config.d_desc));
  }
  return *d.desc_embedding;
}

TrainingSet make_training_set(const Catalog& catalog, const model::ModelConfig& config,
                              std::vector<std::string>* excluded) {
  config.validate();
  if (2 * catalog.embedding_width() != config.d_pipe) {
    throw DataError("catalog doc embeddings have width " +
                    std::to_string(catalog.embedding_width()) + ", the model expects pipeline width " +
                    std::to_string(config.d_pipe));
  }
  std::vector<const DatasetRecord*> rows;
  for (const auto& d : catalog.datasets) {
    if (d.split != Split::train) continue;
    if (!d.best_label && excluded) {
      excluded->push_back(d.id);
      continue;
    }
    rows.push_back(&d);
  }
  if (rows.size() < 2) {
    throw DataError("training needs at least 2 usable training datasets, found " +
                    std::to_string(rows.size()));
  }

  TrainingSet t;
  const std::size_t n = rows.size();
  if (config.d_meta > 0) {
    std::vector<std::vector<double>> raw;
    for (const auto* d : rows) {
      if (!d->meta) throw DataError("dataset '" + d->id + "' has no meta-features");
      raw.push_back(*d->meta);
    }
    t.standardizer = meta::fit_standardizer(raw);
  }
  t.meta = Matrix(n, config.d_meta);
  t.desc = Matrix(n, config.d_desc);
  t.pipe = Matrix(n, config.d_pipe);
  for (std::size_t i = 0; i < n; ++i) {
    const DatasetRecord& d = *rows[i];
    t.ids.push_back(d.id);
    const auto m = meta_input(d, t.standardizer, config);
    std::copy(m.begin(), m.end(), t.meta.row(i).data());
    const auto e = desc_input(d, config);
    std::copy(e.begin(), e.end(), t.desc.row(i).data());
    t.labels.push_back(d.best_label);
    if (d.best_label) {
      const auto p = embed::embed_pipeline(*d.best_label, catalog.vocabulary, catalog.primitive_docs);
      std::copy(p.begin(), p.end(), t.pipe.row(i).data());
    }
  }
  return t;
}

double pipeline_loss(const model::PipelineDistribution& d, const PipelineLabel& label) {
  return -std::log(std::max(d.p_feat.at(label.feature_processor), ad::kProbabilityFloor)) -
         std::log(std::max(d.p_est.at(label.estimator), ad::kProbabilityFloor));
}

Trainer::Trainer(model::ZeroShotModel& model, const TrainingSet& data, const TrainConfig& config)
    : model_(&model),
      data_(&data),
      config_(config),
      rng_(mix64(config.seed ^ kStepStream)),
      params_(model.parameters()) {
  config_.validate();
  if (data.size() < 2) throw DataError("training needs at least 2 nodes");
}

double Trainer::step() {
  const auto target =
      static_cast<std::size_t>(unit_double(rng_()) * static_cast<double>(data_->size()));
  return step_at(std::min(target, data_->size() - 1));
}

double Trainer::step_at(std::size_t target) {
  const auto& label = data_->labels.at(target);
  if (!label) {
    throw DataError("training dataset '" + data_->ids[target] + "' has no best-pipeline label");
  }
  auto& m = *model_;
  ad::Tape tape;
  ad::Var fused = model::fuse_dataset(tape, m, tape.constant(data_->meta), tape.constant(data_->desc));
  if (adjacency_.empty() || steps_ % config_.graph_rebuild_every == 0) {
    adjacency_ = graph::knn_adjacency(graph::pairwise_distances(fused.value()),
                                      m.config().k_neighbors);
  }
  const auto heads = model::masked_node_logits(tape, m, fused, data_->pipe, adjacency_, target);
  ad::Var loss = model::pipeline_loss(heads, *label);
  ad::zero_grad(params_);
  tape.backward(loss);
  ad::adam_step(params_, config_.adam);
  ++steps_;
  return loss.scalar();
}

std::string format_log_line(const LogEntry& e) {
  std::string out = std::to_string(e.step) + "\t" + text::format_double(e.loss + 0.0);
  if (e.eval) {
    out += "\t" + text::format_double(e.eval->feat_acc) + "\t" +
           text::format_double(e.eval->est_acc) + "\t" + text::format_double(e.eval->joint_acc);
  }
  return out;
}

Checkpoint make_checkpoint(const model::ZeroShotModel& model, const TrainingSet& data,
                           const Catalog& catalog, std::uint64_t seed, std::uint64_t iteration) {
  Checkpoint ck;
  ck.model = model;
  ck.standardizer = data.standardizer;
  ck.vocabulary = catalog.vocabulary;
  ck.meta_names = model.config().d_meta ? catalog.meta_names : std::vector<std::string>{};
  ck.primitive_docs = catalog.primitive_docs;
  ck.embedding_seed = catalog.embedding_seed;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.labels[i]) {
      throw DataError("training dataset '" + data.ids[i] + "' has no best-pipeline label");
    }
    ck.labels.push_back(*data.labels[i]);
  }
  ck.graph = graph::build_knn_graph(model::fuse_dataset(model, data.meta, data.desc),
                                    model.config().k_neighbors, data.ids);
  ck.seed = seed;
  ck.iteration = iteration;
  return ck;
}

EvalMetrics evaluate(const Checkpoint& ck, const Catalog& catalog, Split split) {
  const auto& cfg = ck.model.config();
  std::vector<const DatasetRecord*> rows;
  for (const auto& d : catalog.datasets)
    if (d.split == split && d.best_label) rows.push_back(&d);
  if (rows.empty()) {
    throw DataError("no labeled datasets in the " + std::string(to_string(split)) + " split");
  }
  const auto engine = ck.engine();
  const std::size_t n = rows.size();
  std::vector<model::PipelineDistribution> dist(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t r = 0; r < n; ++r) {
    try {
      const DatasetRecord& d = *rows[r];
      model::HeadLogits logits;
      auto it = std::find(ck.graph.node_ids.begin(), ck.graph.node_ids.end(), d.id);
      if (it != ck.graph.node_ids.end()) {
        logits = engine.query_masked(static_cast<std::size_t>(it - ck.graph.node_ids.begin()));
      } else {
        const auto f =
            model::fuse_dataset(ck.model, meta_input(d, ck.standardizer, cfg), desc_input(d, cfg));
        logits = engine.query_new(f, cfg.k_neighbors);
      }
      dist[r] = model::softmax_heads(logits);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalMetrics m;
  m.count = n;
  std::size_t feat = 0, est = 0, joint = 0;
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const PipelineLabel want = *rows[r]->best_label;
    const PipelineLabel got = model::select_pipeline(dist[r]);
    feat += got.feature_processor == want.feature_processor;
    est += got.estimator == want.estimator;
    joint += got == want;
    loss += pipeline_loss(dist[r], want);
  }
  const double dn = static_cast<double>(n);
  m.feat_acc = static_cast<double>(feat) / dn;
  m.est_acc = static_cast<double>(est) / dn;
  m.joint_acc = static_cast<double>(joint) / dn;
  m.mean_loss = loss / dn;
  return m;
}

TrainResult train(const Catalog& catalog, const model::ModelConfig& model_config,
                  const TrainConfig& cfg, const std::function<void(const LogEntry&)>& on_log) {
  cfg.validate();
  TrainResult result;
  const TrainingSet data = make_training_set(catalog, model_config, &result.excluded);
  model::ZeroShotModel model(model_config, mix64(cfg.seed ^ kModelStream));
  Trainer trainer(model, data, cfg);

  bool can_eval = false;
  for (const auto& d : catalog.datasets)
    can_eval = can_eval || (d.split == Split::test && d.best_label);
  can_eval = can_eval && cfg.eval_every > 0;

  std::optional<Checkpoint> best;
  double best_joint = -1.0;
  std::size_t stale = 0;
  for (std::size_t s = 1; s <= cfg.iterations; ++s) {
    LogEntry entry{s, trainer.step(), std::nullopt};
    bool stop = false;
    if (can_eval && (s % cfg.eval_every == 0 || s == cfg.iterations)) {
      Checkpoint ck = make_checkpoint(model, data, catalog, cfg.seed, s);
      entry.eval = evaluate(ck, catalog, Split::test);
      if (cfg.early_stop_patience > 0) {
        if (entry.eval->joint_acc > best_joint) {
          best_joint = entry.eval->joint_acc;
          best = std::move(ck);
          stale = 0;
        } else if (++stale >= cfg.early_stop_patience) {
          stop = true;
        }
      }
    }
    if (on_log) on_log(entry);
    result.log.push_back(std::move(entry));
    if (stop) break;
  }
  result.checkpoint = best ? std::move(*best)
                           : make_checkpoint(model, data, catalog, cfg.seed, trainer.steps_taken());
  return result;
}

}  // namespace zeroshot::train
