#pragma once

#include <span>
#include <vector>

#include "gsmote/graph.hpp"
#include "gsmote/rng.hpp"

namespace gsmote {

enum class ScaleMode { uniform, class_balanced };

struct OversamplePlan {
  std::vector<std::size_t> per_class_new_count;
  ScaleMode scale_mode = ScaleMode::uniform;

  std::size_t total() const;
};

/// Appended samples, each interpolated between a seed node and its neighbor.
struct SyntheticBatch {
  Matrix embeddings;  // k x h
  std::vector<int> labels;
  NodeSet seeds;
  NodeSet neighbors;
  std::vector<double> deltas;

  std::size_t size() const { return labels.size(); }
};

/// Closest train node u != v of v's class by Euclidean distance, lowest index
/// on ties; v itself if it is alone in its class.
NodeIndex nearest_same_class(const Matrix& embeddings, std::span<const int> labels,
                             std::span<const NodeIndex> train_mask, NodeIndex v);

/// (1 - delta) a + delta b; delta must lie in [0, 1].
Vector interpolate(const Vector& a, const Vector& b, double delta);

/// uniform: round(scale * |C_c|) for each minority class.
/// class_balanced: max(0, round(n_train / m) - |C_c|) for every class.
OversamplePlan build_plan(const ClassStats& stats, ScaleMode mode, double scale);

/// Draws plan.per_class_new_count[c] seeds per class uniformly with
/// replacement from the class's train nodes, pairs each with its nearest
/// same-class neighbor and a delta ~ U[0, 1). Classes are visited in index order.
SyntheticBatch oversample(const Matrix& embeddings, std::span<const int> labels,
                          std::span<const NodeIndex> train_mask, const OversamplePlan& plan, Rng& rng);

/// Same seed draws as oversample but with delta = 0 and neighbor = seed.
SyntheticBatch duplicate(const Matrix& embeddings, std::span<const int> labels,
                         std::span<const NodeIndex> train_mask, const OversamplePlan& plan, Rng& rng);

}  // namespace gsmote
