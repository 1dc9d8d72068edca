#pragma once

#include <span>
#include <vector>

#include "gsmote/autodiff.hpp"
#include "gsmote/graph.hpp"

namespace gsmote {

enum class Provenance { real, smote, mixed };

/// Real graph plus k appended nodes.
///
/// The (n+k) x (n+k) adjacency is kept in block form: the real block is the
/// original sparse A; `extra_edges` is the k x n block linking appended nodes
/// to real nodes and is mirrored implicitly. Appended nodes are never linked
/// to each other. `extra_edges` may be a constant (binary or heuristic
/// weights) or a differentiable value (soft edges).
struct AugmentedGraph {
  SparseHandle base;
  NodeIndex n = 0;
  Eigen::Index extra = 0;
  ad::Var extra_edges;  // k x n; undefined when the appended nodes are isolated

  ad::Var embeddings;                // (n+k) x h
  std::vector<int> labels;           // hard label per node; kUnknownLabel for unlabeled real nodes
  Matrix mixed_targets;              // one label distribution per mixed node
  std::vector<Provenance> provenance;

  static AugmentedGraph real_only(const SparseHandle& adjacency);
  /// Real graph with layer input `rows` (n x h) and per-node labels.
  static AugmentedGraph with_embeddings(const SparseHandle& adjacency, const ad::Var& rows,
                                        std::vector<int> labels);

  Eigen::Index total() const { return n + extra; }

  /// Ã * y for y with total() rows.
  ad::Var propagate(const ad::Var& y) const;

  /// Row sums of Ã as a column.
  ad::Var degree() const;

  /// Dense Ã; for tests and small inspection only.
  Matrix dense_adjacency() const;

  /// First n rows of `embeddings`.
  const ad::Var& real_embeddings() const { return real_rows_; }

  /// Appends `count` nodes linked to real nodes by `edges` (k x n; undefined
  /// for isolated nodes). `rows` and `node_labels` may be empty when the graph
  /// is used for propagation only.
  void append(const ad::Var& edges, Eigen::Index count, Provenance kind, const ad::Var& rows = {},
              std::span<const int> node_labels = {});

 private:
  ad::Var real_rows_;
};

}  // namespace gsmote
