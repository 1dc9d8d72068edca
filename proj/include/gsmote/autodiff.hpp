#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gsmote/graph.hpp"

namespace gsmote::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Node;

/// Backward rule: given the adjoint of this node's output, add contributions to
/// each parent's adjoint. Slots are null for parents that do not need a gradient.
using BackwardFn = std::function<void(const Node& self, const Matrix& upstream,
                                      std::span<Matrix* const> parent_adjoints)>;

struct Node {
  Matrix data;
  Matrix grad;  // 0x0 until the first backward pass reaches this node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};

/// Handle to a node in the computation graph.
///
/// Forward values are computed eagerly; provenance is recorded only when an
/// input requires a gradient and no NoGradGuard is active on this thread.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Matrix value);
  static Var parameter(Matrix value);
  static Var scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

  bool defined() const { return static_cast<bool>(node_); }
  const Matrix& data() const { return node_->data; }
  Matrix& mutable_data() { return node_->data; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0 || node_->data.size() == 0; }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }
  void zero_grad() { node_->grad.resize(0, 0); }

  Eigen::Index rows() const { return node_->data.rows(); }
  Eigen::Index cols() const { return node_->data.cols(); }
  double item() const;

  /// Same value, cut from the graph.
  Var detach() const { return constant(node_->data); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables provenance recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Linear algebra.
Var matmul(const Var& a, const Var& b);
/// s * b with s a constant sparse matrix.
Var sparse_matmul(const SparseHandle& s, const Var& b);
Var transpose(const Var& a);
Var concat_cols(const Var& a, const Var& b);
Var concat_rows(const Var& a, const Var& b);
Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count);

/// Row k of the result is (1 - w[k]) * a.row(first[k]) + w[k] * a.row(second[k]).
Var mix_rows(const Var& a, std::span<const NodeIndex> first, std::span<const NodeIndex> second,
             std::span<const double> weight);

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// a - s for a constant sparse s of the same shape.
Var sub_sparse(const Var& a, const SparseHandle& s);
Var scale(const Var& a, double factor);
Var hadamard(const Var& a, const Var& b);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var power(const Var& a, double exponent);
/// 1/x where x != 0, else 0.
Var safe_reciprocal(const Var& a);

// Reductions and broadcasting.
Var row_softmax(const Var& a);
/// n x 1 column of row sums.
Var row_sum(const Var& a);
/// 1 x n row of column sums.
Var col_sum(const Var& a);
/// Scales row i of a by s(i, 0); s is a column vector.
Var scale_rows(const Var& a, const Var& s);
Var sum(const Var& a);
Var frobenius_sq(const Var& a);

/// sum_ij (sigmoid((h s h^T)_ij) - a_ij)^2 as one node.
Var sigmoid_gram_sq_error(const Var& h, const Var& s, const SparseHandle& a);

/// Mean over `rows` of -sum_c targets(k, c) * log(probs(rows[k], c)), optionally
/// weighted per row. targets has one row per entry of `rows`.
Var masked_cross_entropy(const Var& probs, const Matrix& targets, std::span<const NodeIndex> rows,
                         std::span<const double> row_weights = {});

/// Accumulates d loss / d leaf into every reachable leaf that requires a gradient.
void backward(const Var& loss);

/// Max elementwise relative error between the analytic gradient of `f` with
/// respect to `param` and central differences (f(x+h) - f(x-h)) / 2h.
/// Relative error is |a - n| / max(|a|, |n|, floor).
double grad_check(const std::function<Var()>& f, Var& param, double h = 1e-5, double floor = 1e-6);

}  // namespace gsmote::ad
