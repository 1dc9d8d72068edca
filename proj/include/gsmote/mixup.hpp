#pragma once

#include <span>
#include <string>
#include <vector>

#include "gsmote/augmented.hpp"
#include "gsmote/edgegen.hpp"
#include "gsmote/rng.hpp"

namespace gsmote {

enum class MixInsertion { vanilla, heuristic, predicted };

struct MixupConfig {
  double b = 0.5;
  double mixup_ratio = 1.0;
  double threshold = 0.3;
  double lambda2 = 0.1;
  bool use_pseudo = true;
  /// Restrict partners to majority classes when any exist.
  bool majority_partner = true;
  MixInsertion insertion = MixInsertion::predicted;

  void validate() const;
};

/// Row k mixes minority node first[k] with partner second[k]:
/// embedding (1 - delta) h_v + delta h_u, label (1 - delta) e_{y_v} + delta e_{y_u}.
struct MixedBatch {
  NodeSet first;
  NodeSet second;
  std::vector<double> deltas;
  std::vector<int> minority_labels;
  Matrix targets;     // k x m
  Matrix embeddings;  // k x h

  std::size_t size() const { return first.size(); }
};

/// Train nodes keep their label; others get argmax P if max P > threshold,
/// else kUnknownLabel.
std::vector<int> pseudo_labels(const Matrix& probs, std::span<const int> labels,
                               std::span<const NodeIndex> train_mask, double threshold);

/// Labels of train nodes only, kUnknownLabel elsewhere.
std::vector<int> train_only_labels(std::span<const int> labels, std::span<const NodeIndex> train_mask,
                                   NodeIndex n);

/// Draws `count` mixed nodes. v is uniform over nodes whose effective label is
/// a minority class (every class when `minority_classes` is empty); u is
/// uniform over nodes of a different class, restricted to non-minority
/// classes when config.majority_partner and such classes exist; delta ~ U[0, b).
MixedBatch mix_nodes(const Matrix& embeddings, std::span<const int> effective_labels, int m,
                     std::span<const int> minority_classes, std::size_t count,
                     const MixupConfig& config, Rng& rng);

/// Mean soft cross-entropy -sum_c targets[k, c] log probs[rows[k], c].
ad::Var mix_loss(const ad::Var& probs, const Matrix& targets, std::span<const NodeIndex> rows);

/// Appends the mixed nodes' rows to `graph` with edges chosen by `strategy`.
void insert_mixed(AugmentedGraph& graph, const EdgeGenerator& gen, const ad::Var& rows,
                  const MixedBatch& batch, MixInsertion strategy, EdgeMode mode, double eta);

MixInsertion parse_insertion(const std::string& name);

}  // namespace gsmote
