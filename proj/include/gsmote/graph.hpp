#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gsmote {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseHandle = std::shared_ptr<const SparseMatrix>;
using NodeIndex = std::int64_t;
using NodeSet = std::vector<NodeIndex>;

/// Label value for nodes whose class is not known.
inline constexpr int kUnknownLabel = -1;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected attributed graph with partial labels.
///
/// The adjacency is stored once, symmetric, binary and without self-loops.
/// Features are dense rows; raw bag-of-words inputs are converted to sparse
/// only where an operation needs it (see features_sparse()).
struct AttributedGraph {
  NodeIndex n = 0;
  int m = 0;
  SparseHandle adjacency;
  Matrix features;
  std::vector<int> labels;

  NodeIndex feature_dim() const { return features.cols(); }
  std::size_t undirected_edge_count() const {
    return adjacency ? static_cast<std::size_t>(adjacency->nonZeros() / 2) : 0;
  }
  bool labeled(NodeIndex v) const { return labels[static_cast<std::size_t>(v)] != kUnknownLabel; }
  int label(NodeIndex v) const { return labels[static_cast<std::size_t>(v)]; }

  /// Features as a sparse matrix (exact zeros dropped).
  SparseMatrix features_sparse() const;

  /// Throws GraphError if any structural invariant is violated.
  void validate() const;
};

struct SplitMasks {
  NodeSet train;
  NodeSet validation;
  NodeSet test;
  std::vector<int> minority_classes;
};

struct ClassStats {
  std::vector<std::size_t> sizes;
  double imbalance_ratio = 1.0;

  std::size_t total() const;
  std::size_t max_size() const;
  /// Classes strictly smaller than the largest class.
  std::vector<int> minority_classes() const;
};

struct LoadReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges = 0;
  std::size_t input_edge_lines = 0;
};

/// Builds a symmetric, binary, loop-free adjacency from an edge list.
SparseMatrix build_adjacency(NodeIndex n, const std::vector<std::pair<NodeIndex, NodeIndex>>& edges,
                             LoadReport* report = nullptr);

AttributedGraph make_graph(Matrix features, std::vector<int> labels, int m,
                           const std::vector<std::pair<NodeIndex, NodeIndex>>& edges,
                           LoadReport* report = nullptr);

/// Reads `edges.tsv`, `features.csv` and `labels.csv` from a dataset directory.
AttributedGraph load_graph(const std::filesystem::path& dataset_dir, LoadReport* report = nullptr);

/// Writes the three dataset files; the inverse of load_graph.
void save_graph(const AttributedGraph& graph, const std::filesystem::path& dataset_dir);

ClassStats class_stats(const AttributedGraph& graph, const NodeSet& train_mask);

struct SplitOptions {
  int minority_count = 3;
  double imbalance_ratio = 0.5;
  int majority_train_size = 20;
  /// Fraction of each class's non-train labeled nodes sent to validation;
  /// the rest go to test unless capped below.
  double validation_fraction = 1.0 / 3.0;
  /// Optional absolute per-class caps (0 = no cap).
  int validation_per_class = 0;
  int test_per_class = 0;
};

SplitMasks make_imbalanced_split(const AttributedGraph& graph, const SplitOptions& options,
                                 std::uint64_t seed);

/// Stochastic block model with class-conditional Gaussian features.
///
/// Node v belongs to class floor(v * m / n); features are N(mu_c, 1) with mu_c
/// equal to `separation` on the coordinates congruent to c mod m.
AttributedGraph generate_synthetic_graph(std::uint64_t seed, NodeIndex n, int m, NodeIndex d,
                                         double intra_p, double inter_p,
                                         double separation = 2.0);

/// Row-L1 normalization of features (zero rows left untouched).
void row_normalize_features(AttributedGraph& graph);

}  // namespace gsmote
