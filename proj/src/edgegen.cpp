#include "gsmote/edgegen.hpp"

namespace gsmote {

using ad::Var;

Var predict_edges(const EdgeGenerator& gen, const Var& h_a, const Var& h_b) {
  if (gen.S.rows() != h_a.cols() || gen.S.cols() != h_b.cols()) {
    throw ad::ShapeError("predict_edges: embedding width differs from S");
  }
  return ad::sigmoid(ad::matmul(ad::matmul(h_a, gen.S), ad::transpose(h_b)));
}

Var edge_loss(const EdgeGenerator& gen, const Var& embeddings, const SparseHandle& adjacency) {
  if (gen.S.rows() != embeddings.cols()) throw ad::ShapeError("edge_loss: embedding width differs from S");
  return ad::sigmoid_gram_sq_error(embeddings, gen.S, adjacency);
}

Var threshold_edges(const EdgeGenerator& gen, const Var& rows, const Var& real, double eta) {
  ad::NoGradGuard guard;
  const Matrix scores = predict_edges(gen, rows, real).data();
  return Var::constant((scores.array() > eta).cast<double>().matrix());
}

void augment_threshold(AugmentedGraph& graph, const EdgeGenerator& gen, const Var& rows,
                       std::span<const int> labels, double eta, Provenance kind) {
  if (rows.rows() == 0) return;
  graph.append(threshold_edges(gen, rows, graph.real_embeddings(), eta), rows.rows(), kind, rows, labels);
}

void augment_soft(AugmentedGraph& graph, const EdgeGenerator& gen, const Var& rows,
                  std::span<const int> labels, Provenance kind) {
  if (rows.rows() == 0) return;
  graph.append(predict_edges(gen, rows, graph.real_embeddings()), rows.rows(), kind, rows, labels);
}

}  // namespace gsmote
