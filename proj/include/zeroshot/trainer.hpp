#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/autodiff.hpp"
#include "zeroshot/catalog.hpp"
#include "zeroshot/checkpoint.hpp"
#include "zeroshot/graph.hpp"
#include "zeroshot/model.hpp"

namespace zeroshot::train {

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t graph_rebuild_every = 1;
  ad::AdamConfig adam;
  std::uint64_t seed = 0;
  /// Held-out evaluation period in steps; 0 disables it.
  std::size_t eval_every = 200;
  /// Evaluations without improvement before stopping; 0 disables early stopping.
  std::size_t early_stop_patience = 0;

  void validate() const;
};

/// Model dimensions implied by a catalog: meta and embedding widths, head
/// widths from the vocabulary. `ablation` is "ZS", "ZSND" or "OnlyDesc".
model::ModelConfig config_for(const Catalog& catalog, std::string_view ablation = "ZS",
                              const model::ModelConfig& base = {});

/// Training-split inputs laid out as matrices.
struct TrainingSet {
  std::vector<std::string> ids;
  /// Standardized meta-features (n x d_meta).
  Matrix meta;
  /// Description embeddings (n x d_desc).
  Matrix desc;
  /// Pipeline embeddings of the best labels (n x d_pipe).
  Matrix pipe;
  std::vector<std::optional<PipelineLabel>> labels;
  meta::Standardizer standardizer;

  std::size_t size() const noexcept { return ids.size(); }
};

/// Builds the training set from the catalog's train split. Unlabeled datasets
/// are left out and their ids appended to `excluded` when it is given;
/// otherwise they are kept without a label, which train_step rejects.
TrainingSet make_training_set(const Catalog& catalog, const model::ModelConfig& config,
                              std::vector<std::string>* excluded = nullptr);

/// Standardized meta row and description row of any catalog dataset.
std::vector<double> meta_input(const DatasetRecord& d, const meta::Standardizer& s,
                               const model::ModelConfig& config);
std::vector<double> desc_input(const DatasetRecord& d, const model::ModelConfig& config);

/// -log p_feat[fp] - log p_est[est] with the probability floor.
double pipeline_loss(const model::PipelineDistribution& d, const PipelineLabel& label);

/// One backprop iteration at a time over a fixed training set.
class Trainer {
 public:
  Trainer(model::ZeroShotModel& model, const TrainingSet& data, const TrainConfig& config);

  /// Rebuilds the graph when due, masks a random node, takes one Adam step
  /// and returns the loss before the update.
  double step();
  /// As step() with the masked node chosen by the caller.
  double step_at(std::size_t target);

  std::size_t steps_taken() const noexcept { return steps_; }
  const graph::Adjacency& adjacency() const noexcept { return adjacency_; }

 private:
  model::ZeroShotModel* model_;
  const TrainingSet* data_;
  TrainConfig config_;
  std::mt19937_64 rng_;
  graph::Adjacency adjacency_;
  std::vector<ad::Parameter*> params_;
  std::size_t steps_ = 0;
};

struct EvalMetrics {
  double feat_acc = 0.0;
  double est_acc = 0.0;
  double joint_acc = 0.0;
  double mean_loss = 0.0;
  std::size_t count = 0;
};

struct LogEntry {
  std::size_t step = 0;
  double loss = 0.0;
  std::optional<EvalMetrics> eval;
};
/// `step <TAB> loss [<TAB> feat_acc <TAB> est_acc <TAB> joint_acc]`
std::string format_log_line(const LogEntry& e);

/// Freezes a model into a checkpoint: F for every training node from the
/// current f_phi and the k-NN graph over it.
Checkpoint make_checkpoint(const model::ZeroShotModel& model, const TrainingSet& data,
                           const Catalog& catalog, std::uint64_t seed, std::uint64_t iteration);

/// Per-head and joint top-1 label agreement over a split. Test datasets are
/// attached as new nodes; training datasets are masked in place.
EvalMetrics evaluate(const Checkpoint& ck, const Catalog& catalog, Split split);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LogEntry> log;
  std::vector<std::string> excluded;
};

/// Full training run: initializes the model from cfg.seed, trains and
/// returns the final (or best-by-eval, with early stopping) checkpoint.
/// `on_log` sees each log entry as it is produced.
TrainResult train(const Catalog& catalog, const model::ModelConfig& model_config,
                  const TrainConfig& cfg,
                  const std::function<void(const LogEntry&)>& on_log = {});

}  // namespace zeroshot::train
