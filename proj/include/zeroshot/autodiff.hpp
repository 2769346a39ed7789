#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records operations in creation order, which is also a topological
// order, so backward() is a single reverse sweep that visits every node once.
// Parameters live outside the tape and receive gradients directly; a tape is
// built per forward pass and thrown away afterwards.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "zeroshot/matrix.hpp"

namespace zeroshot::ad {

/// A learnable tensor plus its gradient and adaptive-moment slots.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
  std::int64_t step = 0;

  void zero_grad();
};

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient accumulated by backward(); all zeros when nothing reached it.
  Matrix grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Calling it again accumulates.
  void backward(Var loss);

  const Matrix& value(int id) const;
  /// Upstream gradient of a node, allocated (zeroed) on first use.
  Matrix& grad(int id);
  bool has_grad(int id) const;
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records a new op node. Throws NumericError if `value` is not finite.
  Var push(Matrix value, std::span<const int> parents, BackwardFn backward,
           const char* op_name);

  /// Signs of every input seen by a piecewise-linear op, in recording order.
  /// Two forward passes with equal patterns lie on the same linear piece.
  std::vector<std::uint8_t>& kink_signs() noexcept { return kink_signs_; }
  const std::vector<std::uint8_t>& kink_signs() const noexcept { return kink_signs_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
    bool grad_ready = false;
  };
  std::vector<Node> nodes_;
  std::vector<std::uint8_t> kink_signs_;
};

/// x * W + b, W shaped (in x out), b shaped (1 x out).
Var affine(Var x, Parameter& w, Parameter& b);
/// [x_1 | x_2 | ...] * W + b without materializing the concatenation. Inputs
/// that do not require gradients are never differentiated.
Var affine(std::span<const Var> inputs, Parameter& w, Parameter& b);
/// x * W
Var matmul(Var x, Parameter& w);
Var leaky_relu(Var x, double slope);
/// Column-wise concatenation [a | b].
Var concat(Var a, Var b);
Var softmax_rows(Var x);
/// Floor applied to probabilities inside the log.
inline constexpr double kProbabilityFloor = 1e-12;
/// -log(max(p[target], floor)) for a single-row probability vector.
Var cross_entropy(Var probs, std::size_t target);
Var add(Var a, Var b);
/// Sum of all entries, as a 1x1 node.
Var sum(Var x);
/// Rows of x in the given order.
Var gather_rows(Var x, std::span<const std::size_t> rows);

/// Neighbour lists for attention. Output row r attends over H row r itself and
/// H rows `neighbors[offsets[r] .. offsets[r+1])`.
struct AttentionNeighborhood {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> neighbors;

  std::size_t output_rows() const noexcept { return offsets.size() - 1; }
  std::span<const std::size_t> of(std::size_t r) const {
    return {neighbors.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  void add_row(std::span<const std::size_t> nbrs) {
    neighbors.insert(neighbors.end(), nbrs.begin(), nbrs.end());
    offsets.push_back(neighbors.size());
  }
};

/// One graph-attention aggregation over already-projected features H:
///   e_rj = leaky(z_self . H_r + z_nbr . H_j), alpha_r = softmax over {r} U N(r),
///   out_r = sum_j alpha_rj H_j.
/// z is (1 x 2d): the first d entries score the centre node, the rest the neighbour.
Var graph_attention(Var h, Parameter& z, const AttentionNeighborhood& nbrs, double slope);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);
void zero_grad(std::span<Parameter* const> params);

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::size_t failures = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t failures = 0;
  bool passed() const noexcept { return failures == 0; }
};

/// Compares analytic gradients against central differences for every entry of
/// every parameter. The relative error of one coordinate is
/// |a - n| / max(|a|, |n|, 1e-6). Coordinates whose +h or -h evaluation lands
/// on a different linear piece of some leaky ReLU are skipped and counted.
GradCheckReport grad_check(const std::function<Var(Tape&)>& build,
                           std::span<Parameter* const> params, double h = 1e-4,
                           double tol = 1e-4);

/// Moves entries closer than `margin` to zero out to +/-margin.
Matrix nudge_off_kinks(Matrix m, double margin = 1e-3);

}  // namespace zeroshot::ad
