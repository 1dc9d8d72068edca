#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

#include "gsmote/graph.hpp"
#include "gsmote/rng.hpp"

namespace fixture {

inline gsmote::Matrix random_matrix(gsmote::Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  gsmote::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.uniform(-1.0, 1.0);
  }
  return m;
}

inline std::vector<std::pair<gsmote::NodeIndex, gsmote::NodeIndex>> random_edges(gsmote::Rng& rng,
                                                                                gsmote::NodeIndex n, double p) {
  std::vector<std::pair<gsmote::NodeIndex, gsmote::NodeIndex>> edges;
  for (gsmote::NodeIndex u = 0; u < n; ++u) {
    for (gsmote::NodeIndex v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  return edges;
}

inline gsmote::AttributedGraph random_graph(std::uint64_t seed, gsmote::NodeIndex n, int m, gsmote::NodeIndex d,
                                            double p = 0.3) {
  gsmote::Rng rng(seed);
  gsmote::Matrix f = random_matrix(rng, n, d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (gsmote::NodeIndex v = 0; v < n; ++v) labels[static_cast<std::size_t>(v)] = static_cast<int>(v % m);
  return gsmote::make_graph(std::move(f), std::move(labels), m, random_edges(rng, n, p));
}

/// 12 nodes, 3 classes, 4 features; classes 0/1 have 4 train nodes and class 2 has 2.
struct Twelve {
  gsmote::AttributedGraph graph;
  gsmote::SplitMasks masks;
};

inline Twelve twelve_node(std::uint64_t seed = 7) {
  Twelve t;
  t.graph = random_graph(seed, 12, 3, 4, 0.35);
  // Labels are v % 3, so class 2 keeps only nodes 2 and 5 in train.
  t.masks.train = {0, 1, 2, 3, 4, 5, 6, 7, 9, 10};
  // Nodes 8 and 11 alone would hold only class 2; score on every node.
  t.masks.validation = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  t.masks.test = t.masks.validation;
  t.masks.minority_classes = {2};
  return t;
}

inline gsmote::SparseHandle sparse(const gsmote::Matrix& dense) {
  return std::make_shared<const gsmote::SparseMatrix>(dense.sparseView());
}

}  // namespace fixture
