#pragma once

// The zero-shot network. Each dataset node carries u = g_theta([F, pipe]) with
// F = f_phi([meta, desc]); three graph-attention layers mix neighbouring nodes
// and two parallel softmax heads score feature processors and estimators.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zeroshot/autodiff.hpp"
#include "zeroshot/graph.hpp"
#include "zeroshot/matrix.hpp"
#include "zeroshot/vocabulary.hpp"

namespace zeroshot::model {

struct ModelConfig {
  std::size_t d_meta = 42;
  std::size_t d_desc = 1024;
  std::size_t d_pipe = 2048;
  std::size_t d_fused = 512;
  std::size_t d_node = 512;
  std::size_t gat_layers = 3;
  std::size_t gat_hidden = 512;
  std::size_t n_feature_processors = 14;
  std::size_t n_estimators = 18;
  double leaky_slope = 0.2;
  std::size_t k_neighbors = 20;

  /// d_meta or d_desc may be zero (ablations) but not both; everything else
  /// must be positive and the slope must lie in (0, 1).
  void validate() const;
  /// "ZS", "ZSND" (no description) or "OnlyDesc" (no meta-features).
  std::string ablation() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Head probabilities for one node.
struct PipelineDistribution {
  std::vector<double> p_feat;
  std::vector<double> p_est;

  friend bool operator==(const PipelineDistribution&, const PipelineDistribution&) = default;
};

/// Raw head outputs for one node.
struct HeadLogits {
  std::vector<double> feat;
  std::vector<double> est;

  friend bool operator==(const HeadLogits&, const HeadLogits&) = default;
};

class ZeroShotModel {
 public:
  ZeroShotModel() = default;
  /// Glorot-uniform weights, zero biases, attention vectors uniform in +-0.1.
  ZeroShotModel(const ModelConfig& config, std::uint64_t seed);

  ZeroShotModel(const ZeroShotModel&) = default;
  ZeroShotModel& operator=(const ZeroShotModel&) = default;

  const ModelConfig& config() const noexcept { return config_; }

  ad::Parameter phi_w0, phi_b0, phi_w1, phi_b1;
  ad::Parameter theta_w0, theta_b0, theta_w1, theta_b1;
  std::vector<ad::Parameter> gat_w;
  std::vector<ad::Parameter> gat_z;
  ad::Parameter feat_w, feat_b, est_w, est_b;

  /// Every parameter in canonical (checkpoint) order.
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  ad::Parameter* find(std::string_view name);
  std::size_t parameter_count() const;

  /// Sets both heads' weights and biases to zero (uniform predictions).
  void zero_heads();

 private:
  ModelConfig config_;
};

// ---- Plain forward passes (no tape) -------------------------------------

/// f_phi over rows: [meta | desc] -> d_fused. Either block may have zero columns.
Matrix fuse_dataset(const ZeroShotModel& m, ConstView meta, ConstView desc);
std::vector<double> fuse_dataset(const ZeroShotModel& m, std::span<const double> meta,
                                 std::span<const double> desc);
/// g_theta over rows: [F | pipe] -> d_node.
Matrix fuse_node(const ZeroShotModel& m, ConstView fused, ConstView pipe);
std::vector<double> fuse_node(const ZeroShotModel& m, std::span<const double> fused,
                              std::span<const double> pipe);

/// Attention of node i over {i} U neighbours at one layer, self first.
/// Inputs are layer inputs u (before W).
std::vector<double> attention_coefficients(const ZeroShotModel& m, std::size_t layer,
                                           std::span<const double> u_i,
                                           std::span<const std::vector<double>> neighbors);

/// Per layer, per node: attention over (self, neighbours...).
using AttentionTrace = std::vector<std::vector<std::vector<double>>>;

/// All gat_layers applied to every node; rows of `u` are node features.
Matrix gat_forward(const ZeroShotModel& m, const Matrix& u, const graph::Adjacency& adjacency,
                   AttentionTrace* trace = nullptr);

HeadLogits head_logits(const ZeroShotModel& m, std::span<const double> h);
PipelineDistribution softmax_heads(const HeadLogits& logits);
PipelineDistribution predict_heads(const ZeroShotModel& m, std::span<const double> h);

/// Row-wise argmax; ties go to the lowest index.
PipelineLabel select_pipeline(const PipelineDistribution& d);
/// n independent draws from the two marginals.
std::vector<PipelineLabel> sample_pipelines(const PipelineDistribution& d, std::size_t n,
                                            std::uint64_t seed);

// ---- Shared row kernels ---------------------------------------------------

/// out = softmax over s of leaky(centre + score[s]) followed by
/// sum_s alpha_s * rows[s]. rows[0] is the centre node. Writes alpha if given.
void attend(std::span<const double* const> rows, double centre,
            std::span<const double> scores, std::size_t width, double slope, double* out,
            double* alpha = nullptr);

// ---- Taped forward passes --------------------------------------------------

ad::Var fuse_dataset(ad::Tape& tape, ZeroShotModel& m, ad::Var meta, ad::Var desc);
ad::Var fuse_node(ad::Tape& tape, ZeroShotModel& m, ad::Var fused, ad::Var pipe);

/// Nodes that can influence a set of targets through `layers` attention layers.
/// `order` lists them so every level is a prefix: levels[l] nodes are needed as
/// layer-l inputs, levels[layers] == targets.size(). `neighborhoods[l]` maps
/// layer-l output rows to input rows, both in `order` positions.
struct ReceptiveField {
  std::vector<std::size_t> order;
  std::vector<std::size_t> levels;
  std::vector<ad::AttentionNeighborhood> neighborhoods;
};
ReceptiveField receptive_field(const graph::Adjacency& adjacency,
                               std::span<const std::size_t> targets, std::size_t layers);

/// GAT stack over `u` whose rows follow rf.order. Returns the rows of the
/// targets, in target order.
ad::Var gat_forward(ad::Tape& tape, ZeroShotModel& m, ad::Var u, const ReceptiveField& rf);

struct TapedHeads {
  ad::Var feat_logits;
  ad::Var est_logits;
};
TapedHeads head_logits(ad::Tape& tape, ZeroShotModel& m, ad::Var h);

/// Cross-entropy of both heads for one row of logits: -log p_feat - log p_est.
ad::Var pipeline_loss(const TapedHeads& heads, const PipelineLabel& label);

/// Logits for node `target` with its pipeline embedding masked. `fused` holds
/// F for every node (rows in node order); `pipe` holds every node's pipeline
/// embedding, of which the target row is ignored. Only the target's receptive
/// field is evaluated.
TapedHeads masked_node_logits(ad::Tape& tape, ZeroShotModel& m, ad::Var fused, const Matrix& pipe,
                              const graph::Adjacency& adjacency, std::size_t target);

}  // namespace zeroshot::model
