#include "gsmote/smote.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gsmote {

std::size_t OversamplePlan::total() const {
  return std::accumulate(per_class_new_count.begin(), per_class_new_count.end(), std::size_t{0});
}

NodeIndex nearest_same_class(const Matrix& embeddings, std::span<const int> labels,
                             std::span<const NodeIndex> train_mask, NodeIndex v) {
  const int y = labels[static_cast<std::size_t>(v)];
  NodeIndex best = v;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const NodeIndex u : train_mask) {
    if (u == v || labels[static_cast<std::size_t>(u)] != y) continue;
    const double d = (embeddings.row(u) - embeddings.row(v)).squaredNorm();
    if (d < best_distance || (d == best_distance && u < best)) {
      best_distance = d;
      best = u;
    }
  }
  return best;
}

Vector interpolate(const Vector& a, const Vector& b, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("interpolate: delta outside [0, 1]");
  if (a.size() != b.size()) throw std::invalid_argument("interpolate: length mismatch");
  return (1.0 - delta) * a + delta * b;
}

OversamplePlan build_plan(const ClassStats& stats, ScaleMode mode, double scale) {
  OversamplePlan plan;
  plan.scale_mode = mode;
  plan.per_class_new_count.assign(stats.sizes.size(), 0);
  if (mode == ScaleMode::uniform) {
    if (!(scale > 0.0)) throw std::invalid_argument("build_plan: scale must be positive");
    for (const int c : stats.minority_classes()) {
      plan.per_class_new_count[static_cast<std::size_t>(c)] =
          static_cast<std::size_t>(std::lround(scale * static_cast<double>(stats.sizes[c])));
    }
    return plan;
  }
  const auto m = static_cast<double>(stats.sizes.size());
  const auto target = std::lround(static_cast<double>(stats.total()) / m);
  for (std::size_t c = 0; c < stats.sizes.size(); ++c) {
    const auto have = static_cast<long>(stats.sizes[c]);
    plan.per_class_new_count[c] = static_cast<std::size_t>(std::max(0L, target - have));
  }
  return plan;
}

namespace {

std::vector<NodeSet> members_by_class(std::span<const int> labels, std::span<const NodeIndex> train_mask,
                                      std::size_t m) {
  std::vector<NodeSet> members(m);
  for (const NodeIndex v : train_mask) {
    const int y = labels[static_cast<std::size_t>(v)];
    if (y >= 0 && static_cast<std::size_t>(y) < m) members[static_cast<std::size_t>(y)].push_back(v);
  }
  return members;
}

SyntheticBatch draw(const Matrix& embeddings, std::span<const int> labels,
                    std::span<const NodeIndex> train_mask, const OversamplePlan& plan, Rng& rng,
                    bool interpolating) {
  SyntheticBatch batch;
  const std::size_t total = plan.total();
  batch.embeddings.resize(static_cast<Eigen::Index>(total), embeddings.cols());
  const auto members = members_by_class(labels, train_mask, plan.per_class_new_count.size());
  std::vector<NodeIndex> neighbor_cache(static_cast<std::size_t>(embeddings.rows()), -1);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < plan.per_class_new_count.size(); ++c) {
    const std::size_t count = plan.per_class_new_count[c];
    if (count == 0) continue;
    const NodeSet& pool = members[c];
    if (pool.empty()) {
      throw std::invalid_argument("oversample: class " + std::to_string(c) + " has no train nodes");
    }
    for (std::size_t i = 0; i < count; ++i, ++row) {
      const NodeIndex seed = pool[static_cast<std::size_t>(rng.index(pool.size()))];
      NodeIndex neighbor = seed;
      double delta = 0.0;
      if (interpolating) {
        auto& cached = neighbor_cache[static_cast<std::size_t>(seed)];
        if (cached < 0) cached = nearest_same_class(embeddings, labels, train_mask, seed);
        neighbor = cached;
        delta = rng.uniform();
      }
      batch.embeddings.row(row) =
          interpolate(embeddings.row(seed).transpose(), embeddings.row(neighbor).transpose(), delta);
      batch.labels.push_back(static_cast<int>(c));
      batch.seeds.push_back(seed);
      batch.neighbors.push_back(neighbor);
      batch.deltas.push_back(delta);
    }
  }
  return batch;
}

}  // namespace

SyntheticBatch oversample(const Matrix& embeddings, std::span<const int> labels,
                          std::span<const NodeIndex> train_mask, const OversamplePlan& plan, Rng& rng) {
  return draw(embeddings, labels, train_mask, plan, rng, true);
}

SyntheticBatch duplicate(const Matrix& embeddings, std::span<const int> labels,
                         std::span<const NodeIndex> train_mask, const OversamplePlan& plan, Rng& rng) {
  return draw(embeddings, labels, train_mask, plan, rng, false);
}

}  // namespace gsmote
