#pragma once

#include <span>

#include "gsmote/augmented.hpp"
#include "gsmote/autodiff.hpp"

namespace gsmote {

enum class EdgeMode { threshold, soft };

/// Bilinear edge scorer sigmoid(h_a S h_b^T).
struct EdgeGenerator {
  ad::Var S;
};

ad::Var predict_edges(const EdgeGenerator& gen, const ad::Var& h_a, const ad::Var& h_b);

/// ||sigmoid(H S H^T) - A||_F^2 over real nodes, diagonal included, unnormalized.
ad::Var edge_loss(const EdgeGenerator& gen, const ad::Var& embeddings, const SparseHandle& adjacency);

/// Binary k x n block: 1 where the predicted score exceeds eta. Detached.
ad::Var threshold_edges(const EdgeGenerator& gen, const ad::Var& rows, const ad::Var& real, double eta);

/// Appends `rows` to `graph`, linked to real nodes by thresholded scores.
void augment_threshold(AugmentedGraph& graph, const EdgeGenerator& gen, const ad::Var& rows,
                       std::span<const int> labels, double eta, Provenance kind = Provenance::smote);

/// Appends `rows` to `graph` with differentiable soft edges.
void augment_soft(AugmentedGraph& graph, const EdgeGenerator& gen, const ad::Var& rows,
                  std::span<const int> labels, Provenance kind = Provenance::smote);

}  // namespace gsmote
