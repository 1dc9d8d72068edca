#include "gsmote/mixup.hpp"

#include <algorithm>
#include <stdexcept>

namespace gsmote {

using ad::Var;

void MixupConfig::validate() const {
  if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("mixup b must lie in (0, 1]");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw std::invalid_argument("mixup threshold must lie in [0, 1)");
  if (!(mixup_ratio >= 0.0)) throw std::invalid_argument("mixup_ratio must be nonnegative");
  if (!(lambda2 >= 0.0)) throw std::invalid_argument("lambda2 must be nonnegative");
}

std::vector<int> pseudo_labels(const Matrix& probs, std::span<const int> labels,
                               std::span<const NodeIndex> train_mask, double threshold) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()), kUnknownLabel);
  for (Eigen::Index v = 0; v < probs.rows(); ++v) {
    Eigen::Index best = 0;
    const double top = probs.row(v).maxCoeff(&best);
    if (top > threshold) out[static_cast<std::size_t>(v)] = static_cast<int>(best);
  }
  for (const NodeIndex v : train_mask) out[static_cast<std::size_t>(v)] = labels[static_cast<std::size_t>(v)];
  return out;
}

std::vector<int> train_only_labels(std::span<const int> labels, std::span<const NodeIndex> train_mask,
                                   NodeIndex n) {
  std::vector<int> out(static_cast<std::size_t>(n), kUnknownLabel);
  for (const NodeIndex v : train_mask) out[static_cast<std::size_t>(v)] = labels[static_cast<std::size_t>(v)];
  return out;
}

MixedBatch mix_nodes(const Matrix& embeddings, std::span<const int> effective_labels, int m,
                     std::span<const int> minority_classes, std::size_t count,
                     const MixupConfig& config, Rng& rng) {
  config.validate();
  MixedBatch batch;
  batch.targets = Matrix::Zero(static_cast<Eigen::Index>(count), m);
  batch.embeddings.resize(static_cast<Eigen::Index>(count), embeddings.cols());
  if (count == 0) return batch;

  std::vector<bool> minority(static_cast<std::size_t>(m), minority_classes.empty());
  for (const int c : minority_classes) minority[static_cast<std::size_t>(c)] = true;
  const bool restrict_partner =
      config.majority_partner && std::find(minority.begin(), minority.end(), false) != minority.end();

  std::vector<NodeSet> by_class(static_cast<std::size_t>(m));
  for (std::size_t v = 0; v < effective_labels.size(); ++v) {
    const int y = effective_labels[v];
    if (y >= 0 && y < m) by_class[static_cast<std::size_t>(y)].push_back(static_cast<NodeIndex>(v));
  }
  NodeSet sources;
  std::vector<NodeSet> partners(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) {
    if (!minority[static_cast<std::size_t>(c)]) continue;
    sources.insert(sources.end(), by_class[static_cast<std::size_t>(c)].begin(),
                   by_class[static_cast<std::size_t>(c)].end());
    for (int o = 0; o < m; ++o) {
      if (o == c || (restrict_partner && minority[static_cast<std::size_t>(o)])) continue;
      auto& list = partners[static_cast<std::size_t>(c)];
      list.insert(list.end(), by_class[static_cast<std::size_t>(o)].begin(),
                  by_class[static_cast<std::size_t>(o)].end());
    }
  }
  std::sort(sources.begin(), sources.end());
  for (auto& list : partners) std::sort(list.begin(), list.end());
  if (sources.empty()) throw std::invalid_argument("mix_nodes: no labeled minority node");

  for (std::size_t k = 0; k < count; ++k) {
    const NodeIndex v = sources[static_cast<std::size_t>(rng.index(sources.size()))];
    const int yv = effective_labels[static_cast<std::size_t>(v)];
    const NodeSet& pool = partners[static_cast<std::size_t>(yv)];
    if (pool.empty()) throw std::invalid_argument("mix_nodes: no valid partner for a minority node");
    const NodeIndex u = pool[static_cast<std::size_t>(rng.index(pool.size()))];
    const int yu = effective_labels[static_cast<std::size_t>(u)];
    const double delta = rng.uniform(0.0, config.b);
    const auto row = static_cast<Eigen::Index>(k);
    batch.embeddings.row(row) = (1.0 - delta) * embeddings.row(v) + delta * embeddings.row(u);
    batch.targets(row, yv) = 1.0 - delta;
    batch.targets(row, yu) = delta;
    batch.first.push_back(v);
    batch.second.push_back(u);
    batch.deltas.push_back(delta);
    batch.minority_labels.push_back(yv);
  }
  return batch;
}

Var mix_loss(const Var& probs, const Matrix& targets, std::span<const NodeIndex> rows) {
  if (rows.empty()) throw std::invalid_argument("mix_loss: empty mixed set");
  return ad::masked_cross_entropy(probs, targets, rows);
}

void insert_mixed(AugmentedGraph& graph, const EdgeGenerator& gen, const Var& rows, const MixedBatch& batch,
                  MixInsertion strategy, EdgeMode mode, double eta) {
  const auto k = static_cast<Eigen::Index>(batch.size());
  if (k == 0) return;
  std::span<const int> labels(batch.minority_labels);
  switch (strategy) {
    case MixInsertion::vanilla:
      graph.append(Var{}, k, Provenance::mixed, rows, labels);
      break;
    case MixInsertion::heuristic: {
      Matrix block = Matrix::Zero(k, graph.n);
      for (Eigen::Index r = 0; r < k; ++r) {
        const double d = batch.deltas[static_cast<std::size_t>(r)];
        for (SparseMatrix::InnerIterator it(*graph.base, batch.first[static_cast<std::size_t>(r)]); it; ++it) {
          block(r, it.col()) += (1.0 - d) * it.value();
        }
        for (SparseMatrix::InnerIterator it(*graph.base, batch.second[static_cast<std::size_t>(r)]); it; ++it) {
          block(r, it.col()) += d * it.value();
        }
      }
      graph.append(Var::constant(std::move(block)), k, Provenance::mixed, rows, labels);
      break;
    }
    case MixInsertion::predicted:
      if (mode == EdgeMode::threshold) {
        augment_threshold(graph, gen, rows, labels, eta, Provenance::mixed);
      } else {
        augment_soft(graph, gen, rows, labels, Provenance::mixed);
      }
      break;
  }
  graph.mixed_targets = batch.targets;
}

MixInsertion parse_insertion(const std::string& name) {
  if (name == "vanilla") return MixInsertion::vanilla;
  if (name == "heuristic") return MixInsertion::heuristic;
  if (name == "predicted") return MixInsertion::predicted;
  throw std::invalid_argument("unknown mixup insertion strategy: " + name);
}

}  // namespace gsmote
