#pragma once

#include <span>
#include <vector>

#include "gsmote/augmented.hpp"
#include "gsmote/autodiff.hpp"
#include "gsmote/graph.hpp"
#include "gsmote/rng.hpp"

namespace gsmote {

enum class Aggregation { sum, mean };
enum class BaseModel { graphsage, gcn };
/// Activation between the classifier's linear map and the softmax.
enum class HeadActivation { relu, identity };

/// relu(concat(x, Ã x) W) with W of shape (2 in) x out.
struct SageBlock {
  ad::Var weight;
  Eigen::Index out_dim() const { return weight.cols(); }
};

/// softmax(relu(concat(h, Ã h) Wc)); for GCN, softmax(relu(Â h Wc)).
struct ClassifierHead {
  ad::Var weight;
};

/// Uniform(-1/sqrt(rows), 1/sqrt(rows)) initialization.
Matrix glorot_uniform_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Neighbor term Ã x, divided by degree under mean aggregation.
ad::Var aggregate(const AugmentedGraph& graph, const ad::Var& x, Aggregation aggregation);

ad::Var sage_forward(const SageBlock& block, const AugmentedGraph& graph, const ad::Var& x,
                     Aggregation aggregation = Aggregation::sum);

/// D^-1/2 (Ã + I) D^-1/2 x with D the degree of Ã + I.
ad::Var gcn_propagate(const AugmentedGraph& graph, const ad::Var& x);

ad::Var gcn_forward(const ad::Var& weight, const AugmentedGraph& graph, const ad::Var& x);

ad::Var classify(const ClassifierHead& head, const ad::Var& h2, const AugmentedGraph& graph,
                 BaseModel base = BaseModel::graphsage, Aggregation aggregation = Aggregation::sum,
                 HeadActivation activation = HeadActivation::relu);

/// Precomputed sparse encoder input: [F | A F] for GraphSage, Â F for GCN.
/// The first layer is then relu(input * W1).
SparseHandle encoder_input(const AttributedGraph& graph, BaseModel base, Aggregation aggregation);

ad::Var encode(const SparseHandle& input, const ad::Var& weight);

/// Mean -log P[v, labels[v]] over the mask, with optional per-row weights.
ad::Var node_loss(const ad::Var& probs, std::span<const int> labels, std::span<const NodeIndex> mask,
                  std::span<const double> row_weights = {});

}  // namespace gsmote
