#include "zeroshot/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "zeroshot/error.hpp"
#include "zeroshot/hash.hpp"
#include "zeroshot/kernels.hpp"

namespace zeroshot::model {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void require_width(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + " width " + std::to_string(got) + ", expected " +
                     std::to_string(want));
  }
}

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }

void leaky_inplace(Matrix& m, double slope) {
  for (double& v : m.values()) v = leaky(v, slope);
}

/// y = [x_1 | x_2 | ...] W + b over rows.
Matrix affine_rows(std::initializer_list<ConstView> inputs, const Matrix& w, const Matrix& b) {
  const std::size_t rows = inputs.begin()->rows;
  Matrix y(rows, w.cols());
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(b.data(), w.cols(), y.row(r).data());
  std::size_t offset = 0;
  for (const ConstView& x : inputs) {
    if (x.rows != rows) throw ShapeError("affine inputs disagree on rows");
    if (x.cols) kernels::omp::gemm_nn(x, w.row_block(offset, x.cols), y);
    offset += x.cols;
  }
  if (offset != w.rows()) {
    throw ShapeError("affine input width " + std::to_string(offset) + " does not match weight " +
                     w.shape_string());
  }
  return y;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t c = 0; c < n; ++c) s += a[c] * b[c];
  return s;
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> p(x.size());
  if (x.empty()) return p;
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t draw(std::span<const double> p, double u) {
  double cum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += p[i];
    if (u < cum) return i;
  }
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double limit, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = (2.0 * unit_double(rng()) - 1.0) * limit;
  return m;
}

Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  return uniform_matrix(fan_in, fan_out,
                        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  if (d_meta == 0 && d_desc == 0) throw ConfigError("d_meta and d_desc cannot both be zero");
  positive(d_pipe, "d_pipe");
  positive(d_fused, "d_fused");
  positive(d_node, "d_node");
  positive(gat_layers, "gat_layers");
  positive(gat_hidden, "gat_hidden");
  positive(n_feature_processors, "n_feature_processors");
  positive(n_estimators, "n_estimators");
  positive(k_neighbors, "k_neighbors");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw ConfigError("leaky_slope must lie in (0, 1)");
  }
}

std::string ModelConfig::ablation() const {
  if (d_desc == 0) return "ZSND";
  if (d_meta == 0) return "OnlyDesc";
  return "ZS";
}

ZeroShotModel::ZeroShotModel(const ModelConfig& c, std::uint64_t seed) : config_(c) {
  c.validate();
  std::mt19937_64 rng(seed);
  const std::size_t in = c.d_meta + c.d_desc;
  phi_w0 = {"f_phi.0.weight", glorot(in, c.d_fused, rng)};
  phi_b0 = {"f_phi.0.bias", Matrix(1, c.d_fused)};
  phi_w1 = {"f_phi.1.weight", glorot(c.d_fused, c.d_fused, rng)};
  phi_b1 = {"f_phi.1.bias", Matrix(1, c.d_fused)};
  theta_w0 = {"g_theta.0.weight", glorot(c.d_fused + c.d_pipe, c.d_node, rng)};
  theta_b0 = {"g_theta.0.bias", Matrix(1, c.d_node)};
  theta_w1 = {"g_theta.1.weight", glorot(c.d_node, c.d_node, rng)};
  theta_b1 = {"g_theta.1.bias", Matrix(1, c.d_node)};
  for (std::size_t l = 0; l < c.gat_layers; ++l) {
    const std::size_t fan_in = l == 0 ? c.d_node : c.gat_hidden;
    const std::string p = "gat." + std::to_string(l);
    gat_w.emplace_back(p + ".W", glorot(fan_in, c.gat_hidden, rng));
    gat_z.emplace_back(p + ".z", uniform_matrix(1, 2 * c.gat_hidden, 0.1, rng));
  }
  feat_w = {"head_feat.weight", glorot(c.gat_hidden, c.n_feature_processors, rng)};
  feat_b = {"head_feat.bias", Matrix(1, c.n_feature_processors)};
  est_w = {"head_est.weight", glorot(c.gat_hidden, c.n_estimators, rng)};
  est_b = {"head_est.bias", Matrix(1, c.n_estimators)};
}

std::vector<ad::Parameter*> ZeroShotModel::parameters() {
  std::vector<ad::Parameter*> out{&phi_w0, &phi_b0, &phi_w1, &phi_b1,
                                  &theta_w0, &theta_b0, &theta_w1, &theta_b1};
  for (std::size_t l = 0; l < gat_w.size(); ++l) {
    out.push_back(&gat_w[l]);
    out.push_back(&gat_z[l]);
  }
  for (auto* p : {&feat_w, &feat_b, &est_w, &est_b}) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> ZeroShotModel::parameters() const {
  auto mut = const_cast<ZeroShotModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

ad::Parameter* ZeroShotModel::find(std::string_view name) {
  for (auto* p : parameters())
    if (p->name == name) return p;
  return nullptr;
}

std::size_t ZeroShotModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->value.size();
  return n;
}

void ZeroShotModel::zero_heads() {
  for (auto* p : {&feat_w, &feat_b, &est_w, &est_b}) p->value.fill(0.0);
}

Matrix fuse_dataset(const ZeroShotModel& m, ConstView meta, ConstView desc) {
  const auto& c = m.config();
  require_width(meta.cols, c.d_meta, "meta-feature");
  require_width(desc.cols, c.d_desc, "description embedding");
  if (meta.rows != desc.rows) throw ShapeError("meta and description rows disagree");
  Matrix h = affine_rows({meta, desc}, m.phi_w0.value, m.phi_b0.value);
  leaky_inplace(h, c.leaky_slope);
  return affine_rows({h}, m.phi_w1.value, m.phi_b1.value);
}

std::vector<double> fuse_dataset(const ZeroShotModel& m, std::span<const double> meta,
                                 std::span<const double> desc) {
  const Matrix f = fuse_dataset(m, ConstView{meta.data(), 1, meta.size()},
                                ConstView{desc.data(), 1, desc.size()});
  return {f.values().begin(), f.values().end()};
}

Matrix fuse_node(const ZeroShotModel& m, ConstView fused, ConstView pipe) {
  const auto& c = m.config();
  require_width(fused.cols, c.d_fused, "fused representation");
  require_width(pipe.cols, c.d_pipe, "pipeline embedding");
  if (fused.rows != pipe.rows) throw ShapeError("fused and pipeline rows disagree");
  Matrix h = affine_rows({fused, pipe}, m.theta_w0.value, m.theta_b0.value);
  leaky_inplace(h, c.leaky_slope);
  return affine_rows({h}, m.theta_w1.value, m.theta_b1.value);
}

std::vector<double> fuse_node(const ZeroShotModel& m, std::span<const double> fused,
                              std::span<const double> pipe) {
  const Matrix u = fuse_node(m, ConstView{fused.data(), 1, fused.size()},
                             ConstView{pipe.data(), 1, pipe.size()});
  return {u.values().begin(), u.values().end()};
}

void attend(std::span<const double* const> rows, double centre, std::span<const double> scores,
            std::size_t width, double slope, double* out, double* alpha) {
  std::vector<double> local;
  if (!alpha) {
    local.resize(rows.size());
    alpha = local.data();
  }
  double mx = -INFINITY;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    alpha[s] = leaky(centre + scores[s], slope);
    mx = std::max(mx, alpha[s]);
  }
  double total = 0.0;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    alpha[s] = std::exp(alpha[s] - mx);
    total += alpha[s];
  }
  std::fill_n(out, width, 0.0);
  for (std::size_t s = 0; s < rows.size(); ++s) {
    alpha[s] /= total;
    const double a = alpha[s];
    const double* src = rows[s];
    for (std::size_t c = 0; c < width; ++c) out[c] += a * src[c];
  }
}

std::vector<double> attention_coefficients(const ZeroShotModel& m, std::size_t layer,
                                           std::span<const double> u_i,
                                           std::span<const std::vector<double>> neighbors) {
  const auto& c = m.config();
  if (layer >= c.gat_layers) throw ShapeError("attention layer out of range");
  const Matrix& w = m.gat_w[layer].value;
  const std::size_t d = w.cols();
  Matrix u(1 + neighbors.size(), w.rows());
  require_width(u_i.size(), w.rows(), "attention input");
  std::copy(u_i.begin(), u_i.end(), u.row(0).data());
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    require_width(neighbors[j].size(), w.rows(), "attention input");
    std::copy(neighbors[j].begin(), neighbors[j].end(), u.row(j + 1).data());
  }
  Matrix h(u.rows(), d);
  kernels::omp::gemm_nn(u, w, h);
  const double* zs = m.gat_z[layer].value.data();
  const double* zn = zs + d;
  std::vector<const double*> rows;
  std::vector<double> scores;
  for (std::size_t s = 0; s < h.rows(); ++s) {
    rows.push_back(h.row(s).data());
    scores.push_back(dot(h.row(s).data(), zn, d));
  }
  std::vector<double> alpha(rows.size()), out(d);
  attend(rows, dot(h.row(0).data(), zs, d), scores, d, c.leaky_slope, out.data(), alpha.data());
  return alpha;
}

Matrix gat_forward(const ZeroShotModel& m, const Matrix& u, const graph::Adjacency& adjacency,
                   AttentionTrace* trace) {
  const auto& c = m.config();
  require_width(u.cols(), c.d_node, "node feature");
  if (adjacency.size() != u.rows()) throw ShapeError("adjacency size does not match node count");
  const std::size_t n = u.rows();
  if (trace) trace->assign(c.gat_layers, std::vector<std::vector<double>>(n));
  Matrix x = u;
  for (std::size_t l = 0; l < c.gat_layers; ++l) {
    const std::size_t d = c.gat_hidden;
    Matrix h(n, d);
    kernels::omp::gemm_nn(x, m.gat_w[l].value, h);
    const double* zs = m.gat_z[l].value.data();
    const double* zn = zs + d;
    std::vector<double> centre(n), score(n);
    for (std::size_t i = 0; i < n; ++i) {
      centre[i] = dot(h.row(i).data(), zs, d);
      score[i] = dot(h.row(i).data(), zn, d);
    }
    Matrix y(n, d);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nb = adjacency[i];
      std::vector<const double*> rows{h.row(i).data()};
      std::vector<double> sc{score[i]};
      for (std::size_t j : nb) {
        rows.push_back(h.row(j).data());
        sc.push_back(score[j]);
      }
      std::vector<double> alpha(rows.size());
      attend(rows, centre[i], sc, d, c.leaky_slope, y.row(i).data(), alpha.data());
      if (trace) (*trace)[l][i] = std::move(alpha);
    }
    if (l + 1 < c.gat_layers) leaky_inplace(y, c.leaky_slope);
    x = std::move(y);
  }
  return x;
}

HeadLogits head_logits(const ZeroShotModel& m, std::span<const double> h) {
  require_width(h.size(), m.config().gat_hidden, "head input");
  const ConstView x{h.data(), 1, h.size()};
  const Matrix f = affine_rows({x}, m.feat_w.value, m.feat_b.value);
  const Matrix e = affine_rows({x}, m.est_w.value, m.est_b.value);
  return {{f.values().begin(), f.values().end()}, {e.values().begin(), e.values().end()}};
}

PipelineDistribution softmax_heads(const HeadLogits& logits) {
  return {softmax(logits.feat), softmax(logits.est)};
}

PipelineDistribution predict_heads(const ZeroShotModel& m, std::span<const double> h) {
  return softmax_heads(head_logits(m, h));
}

PipelineLabel select_pipeline(const PipelineDistribution& d) {
  return {argmax(d.p_feat), argmax(d.p_est)};
}

std::vector<PipelineLabel> sample_pipelines(const PipelineDistribution& d, std::size_t n,
                                            std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample_pipelines needs n >= 1");
  std::mt19937_64 rng(seed);
  std::vector<PipelineLabel> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t fp = draw(d.p_feat, unit_double(rng()));
    const std::size_t est = draw(d.p_est, unit_double(rng()));
    out.push_back({fp, est});
  }
  return out;
}

ad::Var fuse_dataset(ad::Tape& tape, ZeroShotModel& m, ad::Var meta, ad::Var desc) {
  const auto& c = m.config();
  require_width(meta.cols(), c.d_meta, "meta-feature");
  require_width(desc.cols(), c.d_desc, "description embedding");
  std::vector<ad::Var> inputs;
  if (meta.cols()) inputs.push_back(meta);
  if (desc.cols()) inputs.push_back(desc);
  (void)tape;
  ad::Var h = ad::leaky_relu(ad::affine(inputs, m.phi_w0, m.phi_b0), c.leaky_slope);
  return ad::affine(h, m.phi_w1, m.phi_b1);
}

ad::Var fuse_node(ad::Tape& tape, ZeroShotModel& m, ad::Var fused, ad::Var pipe) {
  const auto& c = m.config();
  require_width(fused.cols(), c.d_fused, "fused representation");
  require_width(pipe.cols(), c.d_pipe, "pipeline embedding");
  (void)tape;
  const ad::Var inputs[] = {fused, pipe};
  ad::Var h = ad::leaky_relu(ad::affine(inputs, m.theta_w0, m.theta_b0), c.leaky_slope);
  return ad::affine(h, m.theta_w1, m.theta_b1);
}

ReceptiveField receptive_field(const graph::Adjacency& adjacency,
                               std::span<const std::size_t> targets, std::size_t layers) {
  const std::size_t n = adjacency.size();
  ReceptiveField rf;
  std::vector<std::size_t> pos(n, kNone);
  for (std::size_t t : targets) {
    if (t >= n) throw ShapeError("receptive field target out of range");
    if (pos[t] != kNone) throw ShapeError("duplicate receptive field target");
    pos[t] = rf.order.size();
    rf.order.push_back(t);
  }
  rf.levels.assign(layers + 1, 0);
  rf.levels[layers] = rf.order.size();
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t end = rf.levels[l + 1];
    std::vector<std::size_t> fresh;
    for (std::size_t r = 0; r < end; ++r) {
      for (std::size_t j : adjacency[rf.order[r]]) {
        if (pos[j] == kNone) {
          pos[j] = kNone - 1;
          fresh.push_back(j);
        }
      }
    }
    std::sort(fresh.begin(), fresh.end());
    for (std::size_t j : fresh) {
      pos[j] = rf.order.size();
      rf.order.push_back(j);
    }
    rf.levels[l] = rf.order.size();
  }
  rf.neighborhoods.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    auto& nh = rf.neighborhoods[l];
    std::vector<std::size_t> row;
    for (std::size_t r = 0; r < rf.levels[l + 1]; ++r) {
      row.clear();
      for (std::size_t j : adjacency[rf.order[r]]) row.push_back(pos[j]);
      nh.add_row(row);
    }
  }
  return rf;
}

ad::Var gat_forward(ad::Tape& tape, ZeroShotModel& m, ad::Var u, const ReceptiveField& rf) {
  const auto& c = m.config();
  require_width(u.cols(), c.d_node, "node feature");
  if (u.rows() != rf.levels.front()) throw ShapeError("node rows do not match receptive field");
  if (rf.neighborhoods.size() != c.gat_layers) {
    throw ShapeError("receptive field depth does not match gat_layers");
  }
  (void)tape;
  ad::Var x = u;
  for (std::size_t l = 0; l < c.gat_layers; ++l) {
    ad::Var h = ad::matmul(x, m.gat_w[l]);
    x = ad::graph_attention(h, m.gat_z[l], rf.neighborhoods[l], c.leaky_slope);
    if (l + 1 < c.gat_layers) x = ad::leaky_relu(x, c.leaky_slope);
  }
  return x;
}

TapedHeads head_logits(ad::Tape& tape, ZeroShotModel& m, ad::Var h) {
  (void)tape;
  return {ad::affine(h, m.feat_w, m.feat_b), ad::affine(h, m.est_w, m.est_b)};
}

ad::Var pipeline_loss(const TapedHeads& heads, const PipelineLabel& label) {
  return ad::add(ad::cross_entropy(ad::softmax_rows(heads.feat_logits), label.feature_processor),
                 ad::cross_entropy(ad::softmax_rows(heads.est_logits), label.estimator));
}

TapedHeads masked_node_logits(ad::Tape& tape, ZeroShotModel& m, ad::Var fused, const Matrix& pipe,
                              const graph::Adjacency& adjacency, std::size_t target) {
  const auto& c = m.config();
  if (fused.rows() != adjacency.size() || pipe.rows() != adjacency.size()) {
    throw ShapeError("fused, pipeline and adjacency sizes disagree");
  }
  require_width(pipe.cols(), c.d_pipe, "pipeline embedding");
  const std::size_t targets[] = {target};
  const ReceptiveField rf = receptive_field(adjacency, targets, c.gat_layers);
  ad::Var f = ad::gather_rows(fused, rf.order);
  Matrix p(rf.order.size(), c.d_pipe);
  for (std::size_t r = 1; r < rf.order.size(); ++r) {
    const auto src = pipe.row(rf.order[r]);
    std::copy(src.begin(), src.end(), p.row(r).data());
  }
  ad::Var u = fuse_node(tape, m, f, tape.constant(std::move(p)));
  return head_logits(tape, m, gat_forward(tape, m, u, rf));
}

}  // namespace zeroshot::model
