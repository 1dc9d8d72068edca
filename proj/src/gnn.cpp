#include "gsmote/gnn.hpp"

#include <cmath>
#include <stdexcept>

namespace gsmote {

using ad::Var;

Matrix glorot_uniform_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = rng.uniform(-bound, bound);
  }
  return w;
}

Var aggregate(const AugmentedGraph& graph, const Var& x, Aggregation aggregation) {
  const Var neighbors = graph.propagate(x);
  if (aggregation == Aggregation::sum) return neighbors;
  return ad::scale_rows(neighbors, ad::safe_reciprocal(graph.degree()));
}

Var sage_forward(const SageBlock& block, const AugmentedGraph& graph, const Var& x,
                 Aggregation aggregation) {
  if (block.weight.rows() != 2 * x.cols()) {
    throw ad::ShapeError("sage_forward: weight must have 2 * input columns rows");
  }
  return ad::relu(ad::matmul(ad::concat_cols(x, aggregate(graph, x, aggregation)), block.weight));
}

Var gcn_propagate(const AugmentedGraph& graph, const Var& x) {
  const Var ones = Var::constant(Matrix::Ones(graph.total(), 1));
  const Var s = ad::power(ad::add(graph.degree(), ones), -0.5);
  const Var scaled = ad::scale_rows(x, s);
  return ad::scale_rows(ad::add(graph.propagate(scaled), scaled), s);
}

Var gcn_forward(const Var& weight, const AugmentedGraph& graph, const Var& x) {
  return ad::relu(ad::matmul(gcn_propagate(graph, x), weight));
}

Var classify(const ClassifierHead& head, const Var& h2, const AugmentedGraph& graph, BaseModel base,
             Aggregation aggregation, HeadActivation activation) {
  if (h2.rows() != graph.total()) throw ad::ShapeError("classify: row count differs from graph size");
  Var logits;
  if (base == BaseModel::gcn) {
    logits = ad::matmul(gcn_propagate(graph, h2), head.weight);
  } else {
    logits = ad::matmul(ad::concat_cols(h2, aggregate(graph, h2, aggregation)), head.weight);
  }
  return ad::row_softmax(activation == HeadActivation::relu ? ad::relu(logits) : logits);
}

SparseHandle encoder_input(const AttributedGraph& graph, BaseModel base, Aggregation aggregation) {
  const SparseMatrix f = graph.features_sparse();
  const SparseMatrix& a = *graph.adjacency;
  Vector degree = Vector::Zero(graph.n);
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) degree(r) += it.value();
  }
  if (base == BaseModel::gcn) {
    const Vector s = (degree.array() + 1.0).rsqrt();
    SparseMatrix identity(graph.n, graph.n);
    identity.setIdentity();
    SparseMatrix hat = a + identity;
    hat = s.asDiagonal() * hat * s.asDiagonal();
    return std::make_shared<const SparseMatrix>(hat * f);
  }
  SparseMatrix neighbors = a * f;
  if (aggregation == Aggregation::mean) {
    const Vector inv = degree.unaryExpr([](double x) { return x != 0.0 ? 1.0 / x : 0.0; });
    neighbors = inv.asDiagonal() * neighbors;
  }
  // Stack [F | neighbors] column-wise.
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(f.nonZeros() + neighbors.nonZeros()));
  for (Eigen::Index r = 0; r < f.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(f, r); it; ++it) entries.emplace_back(r, it.col(), it.value());
    for (SparseMatrix::InnerIterator it(neighbors, r); it; ++it) {
      entries.emplace_back(r, f.cols() + it.col(), it.value());
    }
  }
  auto stacked = std::make_shared<SparseMatrix>(graph.n, 2 * f.cols());
  stacked->setFromTriplets(entries.begin(), entries.end());
  return stacked;
}

Var encode(const SparseHandle& input, const Var& weight) {
  return ad::relu(ad::sparse_matmul(input, weight));
}

Var node_loss(const Var& probs, std::span<const int> labels, std::span<const NodeIndex> mask,
              std::span<const double> row_weights) {
  if (mask.empty()) throw std::invalid_argument("node_loss: empty mask");
  Matrix targets = Matrix::Zero(static_cast<Eigen::Index>(mask.size()), probs.cols());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const int y = labels[static_cast<std::size_t>(mask[k])];
    if (y < 0 || y >= probs.cols()) throw std::invalid_argument("node_loss: masked node without a valid label");
    targets(static_cast<Eigen::Index>(k), y) = 1.0;
  }
  return ad::masked_cross_entropy(probs, targets, mask, row_weights);
}

}  // namespace gsmote
