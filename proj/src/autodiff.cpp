#include "zeroshot/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "zeroshot/error.hpp"
#include "zeroshot/kernels.hpp"

namespace zeroshot::ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string shapes(const Matrix& a, const Matrix& b) {
  return a.shape_string() + " vs " + b.shape_string();
}

}  // namespace

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(value.rows(), value.cols()),
      first_moment(value.rows(), value.cols()),
      second_moment(value.rows(), value.cols()) {}

void Parameter::zero_grad() { grad.fill(0.0); }

const Matrix& Var::value() const { return tape_->value(id_); }

Matrix Var::grad() const {
  if (tape_->has_grad(id_)) return tape_->grad(id_);
  return Matrix(rows(), cols());
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on node of shape " + v.shape_string());
  return v.data()[0];
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.param = &p;
  n.requires_grad = true;
  if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows(), p.value.cols());
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param ? n.param->value : n.value;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.param) {
    n.grad_ready = true;
    return n.param->grad;
  }
  if (!n.grad_ready) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.grad_ready = true;
  }
  return n.grad;
}

bool Tape::has_grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.param != nullptr || n.grad_ready;
}

Var Tape::push(Matrix value, std::span<const int> parents, BackwardFn backward,
               const char* op_name) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op_name) + " produced a non-finite value");
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](int p) { return requires_grad(p); });
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ShapeError("backward() on a node from another tape");
  const Matrix& lv = value(loss.id_);
  if (lv.size() != 1) throw ShapeError("backward() needs a scalar loss, got " + lv.shape_string());
  for (Node& n : nodes_) {
    if (!n.param) {
      n.grad_ready = false;
      n.grad = Matrix();
    }
  }
  grad(loss.id_).data()[0] += 1.0;
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || !n.grad_ready || !n.backward) continue;
    n.backward(*this, id);
  }
}

Var affine(std::span<const Var> inputs, Parameter& w, Parameter& b) {
  require(!inputs.empty(), "affine() needs at least one input");
  Tape& tape = inputs.front().tape();
  const std::size_t rows = inputs.front().rows();
  std::size_t width = 0;
  for (const Var& x : inputs) {
    require(x.rows() == rows, "affine() inputs disagree on rows: " +
                                  inputs.front().value().shape_string() + " vs " +
                                  x.value().shape_string());
    width += x.cols();
  }
  require(width == w.value.rows(), "affine() input width " + std::to_string(width) +
                                       " does not match weight " + w.value.shape_string() +
                                       " (" + w.name + ")");
  require(b.value.rows() == 1 && b.value.cols() == w.value.cols(),
          "affine() bias " + b.value.shape_string() + " does not match weight " +
              w.value.shape_string() + " (" + b.name + ")");

  const std::size_t out = w.value.cols();
  Matrix y(rows, out);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(b.value.data(), out, y.row(r).data());
  std::size_t offset = 0;
  for (const Var& x : inputs) {
    if (x.cols()) kernels::omp::gemm_nn(x.value(), w.value.row_block(offset, x.cols()), y);
    offset += x.cols();
  }

  const int wid = tape.parameter(w).id();
  const int bid = tape.parameter(b).id();
  std::vector<int> parents{wid, bid};
  std::vector<int> xs;
  for (const Var& x : inputs) {
    parents.push_back(x.id());
    xs.push_back(x.id());
  }
  return tape.push(
      std::move(y), parents,
      [wid, bid, xs](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        Matrix& dw = t.grad(wid);
        const Matrix& wv = t.value(wid);
        Matrix& db = t.grad(bid);
        for (std::size_t r = 0; r < dy.rows(); ++r) {
          const auto row = dy.row(r);
          for (std::size_t c = 0; c < dy.cols(); ++c) db(0, c) += row[c];
        }
        std::size_t offset = 0;
        for (int xid : xs) {
          const Matrix& xv = t.value(xid);
          if (xv.cols()) {
            kernels::omp::gemm_tn(xv, dy, dw.row_block(offset, xv.cols()));
            if (t.requires_grad(xid)) {
              kernels::omp::gemm_nt(dy, wv.row_block(offset, xv.cols()), t.grad(xid));
            }
          }
          offset += xv.cols();
        }
      },
      "affine");
}

Var affine(Var x, Parameter& w, Parameter& b) {
  const Var inputs[] = {x};
  return affine(std::span<const Var>(inputs), w, b);
}

Var matmul(Var x, Parameter& w) {
  Tape& tape = x.tape();
  require(x.cols() == w.value.rows(), "matmul() shape mismatch: " +
                                          shapes(x.value(), w.value) + " (" + w.name + ")");
  Matrix y(x.rows(), w.value.cols());
  kernels::omp::gemm_nn(x.value(), w.value, y);
  const int wid = tape.parameter(w).id();
  const int xid = x.id();
  const int parents[] = {wid, xid};
  return tape.push(
      std::move(y), parents,
      [wid, xid](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        kernels::omp::gemm_tn(t.value(xid), dy, t.grad(wid));
        if (t.requires_grad(xid)) kernels::omp::gemm_nt(dy, t.value(wid), t.grad(xid));
      },
      "matmul");
}

Var leaky_relu(Var x, double slope) {
  Tape& tape = x.tape();
  const Matrix& xv = x.value();
  Matrix y(xv.rows(), xv.cols());
  auto& signs = tape.kink_signs();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv.data()[i];
    y.data()[i] = v > 0.0 ? v : slope * v;
    signs.push_back(v > 0.0);
  }
  const int xid = x.id();
  const int parents[] = {xid};
  return tape.push(
      std::move(y), parents,
      [xid, slope](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        const Matrix& xv = t.value(xid);
        Matrix& dx = t.grad(xid);
        for (std::size_t i = 0; i < xv.size(); ++i) {
          dx.data()[i] += xv.data()[i] > 0.0 ? dy.data()[i] : slope * dy.data()[i];
        }
      },
      "leaky_relu");
}

Var concat(Var a, Var b) {
  Tape& tape = a.tape();
  require(a.rows() == b.rows(), "concat() row mismatch: " + shapes(a.value(), b.value()));
  const std::size_t ca = a.cols(), cb = b.cols();
  Matrix y(a.rows(), ca + cb);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.value().row(r).data(), ca, y.row(r).data());
    std::copy_n(b.value().row(r).data(), cb, y.row(r).data() + ca);
  }
  const int aid = a.id(), bid = b.id();
  const int parents[] = {aid, bid};
  return tape.push(
      std::move(y), parents,
      [aid, bid, ca, cb](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        if (t.requires_grad(aid)) {
          Matrix& da = t.grad(aid);
          for (std::size_t r = 0; r < dy.rows(); ++r)
            for (std::size_t c = 0; c < ca; ++c) da(r, c) += dy(r, c);
        }
        if (t.requires_grad(bid)) {
          Matrix& db = t.grad(bid);
          for (std::size_t r = 0; r < dy.rows(); ++r)
            for (std::size_t c = 0; c < cb; ++c) db(r, c) += dy(r, ca + c);
        }
      },
      "concat");
}

Var softmax_rows(Var x) {
  Tape& tape = x.tape();
  const Matrix& xv = x.value();
  Matrix y(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row(r);
    auto out = y.row(r);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      total += out[c];
    }
    for (double& v : out) v /= total;
  }
  const int xid = x.id();
  const int parents[] = {xid};
  return tape.push(
      std::move(y), parents,
      [xid](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        const Matrix& yv = t.value(self);
        Matrix& dx = t.grad(xid);
        for (std::size_t r = 0; r < yv.rows(); ++r) {
          const auto g = dy.row(r);
          const auto p = yv.row(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < p.size(); ++c) dot += g[c] * p[c];
          for (std::size_t c = 0; c < p.size(); ++c) dx(r, c) += p[c] * (g[c] - dot);
        }
      },
      "softmax_rows");
}

Var cross_entropy(Var probs, std::size_t target) {
  Tape& tape = probs.tape();
  const Matrix& pv = probs.value();
  require(pv.rows() == 1, "cross_entropy() expects a single row, got " + pv.shape_string());
  require(target < pv.cols(), "cross_entropy() target " + std::to_string(target) +
                                  " out of range for " + pv.shape_string());
  const double p = pv(0, target);
  Matrix y(1, 1, -std::log(std::max(p, kProbabilityFloor)));
  const int pid = probs.id();
  const int parents[] = {pid};
  return tape.push(
      std::move(y), parents,
      [pid, target](Tape& t, int self) {
        const double g = t.grad(self)(0, 0);
        const double p = t.value(pid)(0, target);
        if (p > kProbabilityFloor) t.grad(pid)(0, target) += -g / p;
      },
      "cross_entropy");
}

Var add(Var a, Var b) {
  Tape& tape = a.tape();
  require(a.value().same_shape(b.value()), "add() shape mismatch: " + shapes(a.value(), b.value()));
  Matrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += b.value().data()[i];
  const int aid = a.id(), bid = b.id();
  const int parents[] = {aid, bid};
  return tape.push(
      std::move(y), parents,
      [aid, bid](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        for (int id : {aid, bid}) {
          if (!t.requires_grad(id)) continue;
          Matrix& d = t.grad(id);
          for (std::size_t i = 0; i < dy.size(); ++i) d.data()[i] += dy.data()[i];
        }
      },
      "add");
}

Var sum(Var x) {
  Tape& tape = x.tape();
  const auto vals = x.value().values();
  Matrix y(1, 1, std::accumulate(vals.begin(), vals.end(), 0.0));
  const int xid = x.id();
  const int parents[] = {xid};
  return tape.push(
      std::move(y), parents,
      [xid](Tape& t, int self) {
        const double g = t.grad(self)(0, 0);
        Matrix& dx = t.grad(xid);
        for (double& v : dx.values()) v += g;
      },
      "sum");
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
  Tape& tape = x.tape();
  const Matrix& xv = x.value();
  Matrix y(rows.size(), xv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < xv.rows(), "gather_rows() index " + std::to_string(rows[r]) +
                                     " out of range for " + xv.shape_string());
    std::copy_n(xv.row(rows[r]).data(), xv.cols(), y.row(r).data());
  }
  const int xid = x.id();
  const int parents[] = {xid};
  return tape.push(
      std::move(y), parents,
      [xid, idx = std::vector<std::size_t>(rows.begin(), rows.end())](Tape& t, int self) {
        const Matrix& dy = t.grad(self);
        Matrix& dx = t.grad(xid);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          const auto src = dy.row(r);
          auto dst = dx.row(idx[r]);
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
      },
      "gather_rows");
}

Var graph_attention(Var h, Parameter& z, const AttentionNeighborhood& nbrs, double slope) {
  Tape& tape = h.tape();
  const Matrix& hv = h.value();
  const std::size_t d = hv.cols();
  const std::size_t out_rows = nbrs.output_rows();
  require(z.value.rows() == 1 && z.value.cols() == 2 * d,
          "graph_attention() attention vector " + z.value.shape_string() +
              " does not match feature width " + std::to_string(d) + " (" + z.name + ")");
  require(out_rows <= hv.rows(), "graph_attention() asks for " + std::to_string(out_rows) +
                                     " rows from " + hv.shape_string());

  const double* zs = z.value.data();
  const double* zn = z.value.data() + d;
  std::vector<double> centre(out_rows), score(hv.rows());
  for (std::size_t j = 0; j < hv.rows(); ++j) {
    const double* row = hv.row(j).data();
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += row[c] * zn[c];
    score[j] = s;
    if (j < out_rows) {
      double sc = 0.0;
      for (std::size_t c = 0; c < d; ++c) sc += row[c] * zs[c];
      centre[j] = sc;
    }
  }

  // Per (row, slot) pre-activation logits and coefficients; slot 0 is self.
  auto pre = std::make_shared<std::vector<double>>();
  auto alpha = std::make_shared<std::vector<double>>();
  pre->reserve(out_rows + nbrs.neighbors.size());
  alpha->reserve(out_rows + nbrs.neighbors.size());
  auto& signs = tape.kink_signs();
  Matrix y(out_rows, d);
  for (std::size_t r = 0; r < out_rows; ++r) {
    const auto nb = nbrs.of(r);
    const std::size_t base = pre->size();
    double mx = -INFINITY;
    for (std::size_t s = 0; s <= nb.size(); ++s) {
      const std::size_t j = s == 0 ? r : nb[s - 1];
      require(j < hv.rows(), "graph_attention() neighbour index out of range");
      const double p = centre[r] + score[j];
      signs.push_back(p > 0.0);
      pre->push_back(p);
      const double e = p > 0.0 ? p : slope * p;
      alpha->push_back(e);
      mx = std::max(mx, e);
    }
    double total = 0.0;
    for (std::size_t s = 0; s <= nb.size(); ++s) {
      double& a = (*alpha)[base + s];
      a = std::exp(a - mx);
      total += a;
    }
    double* out = y.row(r).data();
    for (std::size_t s = 0; s <= nb.size(); ++s) {
      double& a = (*alpha)[base + s];
      a /= total;
      const double* src = hv.row(s == 0 ? r : nb[s - 1]).data();
      for (std::size_t c = 0; c < d; ++c) out[c] += a * src[c];
    }
  }

  const int hid = h.id();
  const int zid = tape.parameter(z).id();
  const int parents[] = {hid, zid};
  auto lists = std::make_shared<const AttentionNeighborhood>(nbrs);
  return tape.push(
      std::move(y), parents,
      [hid, zid, lists, slope, pre, alpha, d](Tape& t, int self) {
        const AttentionNeighborhood& nbrs = *lists;
        const Matrix& dy = t.grad(self);
        const Matrix& hv = t.value(hid);
        const Matrix& zv = t.value(zid);
        const bool want_h = t.requires_grad(hid);
        Matrix dh_local(hv.rows(), d);
        std::vector<double> dscore(hv.rows(), 0.0), dcentre(dy.rows(), 0.0);
        std::vector<double> dalpha;
        std::size_t base = 0;
        for (std::size_t r = 0; r < dy.rows(); ++r) {
          const auto nb = nbrs.of(r);
          const double* g = dy.row(r).data();
          const std::size_t slots = nb.size() + 1;
          dalpha.assign(slots, 0.0);
          double weighted = 0.0;
          for (std::size_t s = 0; s < slots; ++s) {
            const std::size_t j = s == 0 ? r : nb[s - 1];
            const double a = (*alpha)[base + s];
            const double* hj = hv.row(j).data();
            double* dhj = dh_local.row(j).data();
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              dot += g[c] * hj[c];
              dhj[c] += a * g[c];
            }
            dalpha[s] = dot;
            weighted += a * dot;
          }
          for (std::size_t s = 0; s < slots; ++s) {
            const std::size_t j = s == 0 ? r : nb[s - 1];
            const double de = (*alpha)[base + s] * (dalpha[s] - weighted);
            const double dp = (*pre)[base + s] > 0.0 ? de : slope * de;
            dcentre[r] += dp;
            dscore[j] += dp;
          }
          base += slots;
        }
        Matrix& dz = t.grad(zid);
        const double* zs = zv.data();
        const double* zn = zv.data() + d;
        for (std::size_t j = 0; j < hv.rows(); ++j) {
          const double* hj = hv.row(j).data();
          double* dhj = dh_local.row(j).data();
          const double dc = j < dy.rows() ? dcentre[j] : 0.0;
          const double ds = dscore[j];
          if (dc == 0.0 && ds == 0.0) continue;
          for (std::size_t c = 0; c < d; ++c) {
            dz(0, c) += dc * hj[c];
            dz(0, d + c) += ds * hj[c];
            dhj[c] += dc * zs[c] + ds * zn[c];
          }
        }
        if (want_h) {
          Matrix& dh = t.grad(hid);
          for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] += dh_local.data()[i];
        }
      },
      "graph_attention");
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    if (!p->first_moment.same_shape(p->value)) {
      p->first_moment = Matrix(p->value.rows(), p->value.cols());
      p->second_moment = Matrix(p->value.rows(), p->value.cols());
    }
    ++p->step;
    const double t = static_cast<double>(p->step);
    const double c1 = 1.0 / (1.0 - std::pow(cfg.beta1, t));
    const double c2 = 1.0 / (1.0 - std::pow(cfg.beta2, t));
    const double b1 = cfg.beta1, b2 = cfg.beta2, lr = cfg.lr, eps = cfg.eps;
    double* __restrict v = p->value.data();
    const double* __restrict g = p->grad.data();
    double* __restrict m1 = p->first_moment.data();
    double* __restrict m2 = p->second_moment.data();
    const std::size_t n = p->value.size();
#pragma omp simd
    for (std::size_t i = 0; i < n; ++i) {
      m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
      m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
      v[i] -= lr * (m1[i] * c1) / (std::sqrt(m2[i] * c2) + eps);
    }
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

GradCheckReport grad_check(const std::function<Var(Tape&)>& build,
                           std::span<Parameter* const> params, double h, double tol) {
  zero_grad(params);
  std::vector<std::uint8_t> base_signs;
  {
    Tape tape;
    Var loss = build(tape);
    base_signs = tape.kink_signs();
    tape.backward(loss);
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto evaluate = [&](bool& same_piece) {
    Tape tape;
    const double v = build(tape).scalar();
    same_piece = tape.kink_signs() == base_signs;
    return v;
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    GradCheckEntry entry;
    entry.name = p.name;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value.data()[i];
      bool same_plus = false, same_minus = false;
      p.value.data()[i] = orig + h;
      const double fp = evaluate(same_plus);
      p.value.data()[i] = orig - h;
      const double fm = evaluate(same_minus);
      p.value.data()[i] = orig;
      if (!same_plus || !same_minus) {
        ++entry.skipped_kinks;
        continue;
      }
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[k].data()[i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
      ++entry.checked;
      if (rel > tol) ++entry.failures;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.failures += entry.failures;
    report.entries.push_back(std::move(entry));
  }
  // Leave the analytic gradients in place for the caller.
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
  return report;
}

Matrix nudge_off_kinks(Matrix m, double margin) {
  for (double& v : m.values()) {
    if (std::abs(v) < margin) v = v < 0.0 ? -margin : margin;
  }
  return m;
}

}  // namespace zeroshot::ad
