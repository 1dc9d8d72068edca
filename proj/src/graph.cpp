#include "gsmote/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gsmote/rng.hpp"

namespace gsmote {
namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open " + path.string());
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view token, const fs::path& file, std::size_t line) {
  token = trim(token);
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end) {
    throw GraphError(file.filename().string() + ":" + std::to_string(line) +
                     ": not a number: '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

SparseMatrix AttributedGraph::features_sparse() const { return features.sparseView(0.0, 0.0); }

void AttributedGraph::validate() const {
  if (!adjacency) throw GraphError("graph has no adjacency");
  const SparseMatrix& a = *adjacency;
  if (a.rows() != n || a.cols() != n) throw GraphError("adjacency shape does not match node count");
  if (features.rows() != n) throw GraphError("features row count does not match node count");
  if (static_cast<NodeIndex>(labels.size()) != n) throw GraphError("label count does not match node count");
  for (NodeIndex v = 0; v < n; ++v) {
    for (SparseMatrix::InnerIterator it(a, v); it; ++it) {
      if (it.col() == v) throw GraphError("adjacency has a self-loop");
      if (it.value() != 1.0) throw GraphError("adjacency entry is not binary");
      if (a.coeff(it.col(), v) != 1.0) throw GraphError("adjacency is not symmetric");
    }
  }
  for (int y : labels) {
    if (y != kUnknownLabel && (y < 0 || y >= m)) throw GraphError("label out of range");
  }
}

std::size_t ClassStats::total() const {
  std::size_t t = 0;
  for (auto s : sizes) t += s;
  return t;
}

std::size_t ClassStats::max_size() const {
  return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

std::vector<int> ClassStats::minority_classes() const {
  std::vector<int> out;
  const auto top = max_size();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < top) out.push_back(static_cast<int>(c));
  }
  return out;
}

SparseMatrix build_adjacency(NodeIndex n, const std::vector<std::pair<NodeIndex, NodeIndex>>& edges,
                             LoadReport* report) {
  std::vector<std::pair<NodeIndex, NodeIndex>> undirected;
  undirected.reserve(edges.size());
  std::size_t loops = 0;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw GraphError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                       ") references a node outside 0.." + std::to_string(n - 1));
    }
    if (u == v) {
      ++loops;
      continue;
    }
    undirected.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(undirected.begin(), undirected.end());
  const auto unique_end = std::unique(undirected.begin(), undirected.end());
  const std::size_t duplicates = static_cast<std::size_t>(undirected.end() - unique_end);
  undirected.erase(unique_end, undirected.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(undirected.size() * 2);
  for (auto [u, v] : undirected) {
    triplets.emplace_back(u, v, 1.0);
    triplets.emplace_back(v, u, 1.0);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  if (report) {
    report->self_loops_dropped += loops;
    report->duplicate_edges += duplicates;
  }
  return a;
}

AttributedGraph make_graph(Matrix features, std::vector<int> labels, int m,
                           const std::vector<std::pair<NodeIndex, NodeIndex>>& edges,
                           LoadReport* report) {
  AttributedGraph g;
  g.n = features.rows();
  g.m = m;
  g.features = std::move(features);
  g.labels = std::move(labels);
  if (static_cast<NodeIndex>(g.labels.size()) != g.n) {
    throw GraphError("features have " + std::to_string(g.n) + " rows but labels have " +
                     std::to_string(g.labels.size()));
  }
  g.adjacency = std::make_shared<SparseMatrix>(build_adjacency(g.n, edges, report));
  g.validate();
  return g;
}

AttributedGraph load_graph(const fs::path& dir, LoadReport* report) {
  const fs::path edges_file = dir / "edges.tsv";
  const fs::path features_file = dir / "features.csv";
  const fs::path labels_file = dir / "labels.csv";
  for (const auto& f : {edges_file, features_file, labels_file}) {
    if (!fs::exists(f)) throw GraphError("missing dataset file " + f.string());
  }

  std::vector<std::vector<double>> rows;
  {
    auto in = open_input(features_file);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      std::vector<double> row;
      std::string_view rest(line);
      while (true) {
        const auto comma = rest.find(',');
        row.push_back(parse_number<double>(rest.substr(0, comma), features_file, lineno));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw GraphError("features.csv:" + std::to_string(lineno) + ": expected " +
                         std::to_string(rows.front().size()) + " columns, got " +
                         std::to_string(row.size()));
      }
      rows.push_back(std::move(row));
    }
  }
  const auto n = static_cast<NodeIndex>(rows.size());
  const auto d = rows.empty() ? NodeIndex{0} : static_cast<NodeIndex>(rows.front().size());
  Matrix features(n, d);
  for (NodeIndex i = 0; i < n; ++i) {
    for (NodeIndex j = 0; j < d; ++j) features(i, j) = rows[i][j];
  }
  rows.clear();

  std::vector<int> labels;
  int max_label = -1;
  {
    auto in = open_input(labels_file);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const int y = parse_number<int>(line, labels_file, lineno);
      if (y < kUnknownLabel) throw GraphError("labels.csv:" + std::to_string(lineno) + ": invalid label");
      max_label = std::max(max_label, y);
      labels.push_back(y);
    }
  }
  if (static_cast<NodeIndex>(labels.size()) != n) {
    throw GraphError("features.csv has " + std::to_string(n) + " rows but labels.csv has " +
                     std::to_string(labels.size()));
  }

  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  {
    auto in = open_input(edges_file);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view s = trim(line);
      if (s.empty()) continue;
      const auto sep = s.find_first_of("\t ");
      if (sep == std::string_view::npos) {
        throw GraphError("edges.tsv:" + std::to_string(lineno) + ": expected two node indices");
      }
      const auto u = parse_number<NodeIndex>(s.substr(0, sep), edges_file, lineno);
      const auto v = parse_number<NodeIndex>(s.substr(sep + 1), edges_file, lineno);
      edges.emplace_back(u, v);
    }
  }
  if (report) report->input_edge_lines += edges.size();
  return make_graph(std::move(features), std::move(labels), max_label + 1, edges, report);
}

void save_graph(const AttributedGraph& graph, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv");
    const SparseMatrix& a = *graph.adjacency;
    for (NodeIndex u = 0; u < graph.n; ++u) {
      for (SparseMatrix::InnerIterator it(a, u); it; ++it) {
        if (it.col() > u) out << u << '\t' << it.col() << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "features.csv");
    out << std::setprecision(17);
    for (NodeIndex i = 0; i < graph.n; ++i) {
      for (NodeIndex j = 0; j < graph.feature_dim(); ++j) {
        if (j) out << ',';
        out << graph.features(i, j);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (int y : graph.labels) out << y << '\n';
  }
}

ClassStats class_stats(const AttributedGraph& graph, const NodeSet& train_mask) {
  if (train_mask.empty()) throw GraphError("class_stats: empty training set");
  ClassStats stats;
  stats.sizes.assign(static_cast<std::size_t>(graph.m), 0);
  for (NodeIndex v : train_mask) {
    if (!graph.labeled(v)) throw GraphError("class_stats: training node " + std::to_string(v) + " is unlabeled");
    ++stats.sizes[static_cast<std::size_t>(graph.label(v))];
  }
  const auto [lo, hi] = std::minmax_element(stats.sizes.begin(), stats.sizes.end());
  if (*lo == 0) throw GraphError("class_stats: a class has no training nodes");
  stats.imbalance_ratio = static_cast<double>(*lo) / static_cast<double>(*hi);
  return stats;
}

SplitMasks make_imbalanced_split(const AttributedGraph& graph, const SplitOptions& opt,
                                 std::uint64_t seed) {
  if (opt.minority_count < 0 || opt.minority_count >= graph.m) {
    throw GraphError("minority_count must be in [0, m)");
  }
  const long minority_train = std::lround(opt.majority_train_size * opt.imbalance_ratio);
  if (opt.majority_train_size * opt.imbalance_ratio < 1.0 || minority_train < 1) {
    throw GraphError("majority_train_size * imbalance_ratio must be at least 1");
  }

  Rng rng(seed);
  std::vector<int> classes(static_cast<std::size_t>(graph.m));
  for (int c = 0; c < graph.m; ++c) classes[static_cast<std::size_t>(c)] = c;
  rng.shuffle(classes);
  SplitMasks masks;
  masks.minority_classes.assign(classes.begin(), classes.begin() + opt.minority_count);
  std::sort(masks.minority_classes.begin(), masks.minority_classes.end());

  std::vector<NodeSet> members(static_cast<std::size_t>(graph.m));
  for (NodeIndex v = 0; v < graph.n; ++v) {
    if (graph.labeled(v)) members[static_cast<std::size_t>(graph.label(v))].push_back(v);
  }
  for (int c = 0; c < graph.m; ++c) {
    auto& pool = members[static_cast<std::size_t>(c)];
    rng.shuffle(pool);
    const bool minority = std::binary_search(masks.minority_classes.begin(),
                                             masks.minority_classes.end(), c);
    const auto want = static_cast<std::size_t>(minority ? minority_train : opt.majority_train_size);
    if (pool.size() < want) {
      throw GraphError("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                       " labeled nodes, " + std::to_string(want) + " requested for training");
    }
    const std::size_t rest = pool.size() - want;
    std::size_t n_val = opt.validation_per_class > 0
                            ? std::min<std::size_t>(rest, static_cast<std::size_t>(opt.validation_per_class))
                            : static_cast<std::size_t>(std::lround(static_cast<double>(rest) * opt.validation_fraction));
    n_val = std::min(n_val, rest);
    std::size_t n_test = rest - n_val;
    if (opt.test_per_class > 0) n_test = std::min<std::size_t>(n_test, static_cast<std::size_t>(opt.test_per_class));

    masks.train.insert(masks.train.end(), pool.begin(), pool.begin() + static_cast<long>(want));
    masks.validation.insert(masks.validation.end(), pool.begin() + static_cast<long>(want),
                            pool.begin() + static_cast<long>(want + n_val));
    masks.test.insert(masks.test.end(), pool.begin() + static_cast<long>(want + n_val),
                      pool.begin() + static_cast<long>(want + n_val + n_test));
  }
  std::sort(masks.train.begin(), masks.train.end());
  std::sort(masks.validation.begin(), masks.validation.end());
  std::sort(masks.test.begin(), masks.test.end());
  return masks;
}

AttributedGraph generate_synthetic_graph(std::uint64_t seed, NodeIndex n, int m, NodeIndex d,
                                         double intra_p, double inter_p, double separation) {
  if (m < 1 || n < m) throw GraphError("generate_synthetic_graph: need n >= m >= 1");
  if (!(0.0 <= inter_p && inter_p <= intra_p && intra_p <= 1.0)) {
    throw GraphError("generate_synthetic_graph: need 0 <= inter_p <= intra_p <= 1");
  }
  Rng rng(seed);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (NodeIndex v = 0; v < n; ++v) labels[static_cast<std::size_t>(v)] = static_cast<int>(v * m / n);

  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  for (NodeIndex u = 0; u < n; ++u) {
    for (NodeIndex v = u + 1; v < n; ++v) {
      const double p = labels[static_cast<std::size_t>(u)] == labels[static_cast<std::size_t>(v)] ? intra_p : inter_p;
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  Matrix features(n, d);
  for (NodeIndex v = 0; v < n; ++v) {
    const int c = labels[static_cast<std::size_t>(v)];
    for (NodeIndex j = 0; j < d; ++j) {
      const double mean = (j % m == c) ? separation : 0.0;
      features(v, j) = mean + rng.normal();
    }
  }
  return make_graph(std::move(features), std::move(labels), m, edges);
}

void row_normalize_features(AttributedGraph& graph) {
  for (NodeIndex i = 0; i < graph.n; ++i) {
    const double s = graph.features.row(i).cwiseAbs().sum();
    if (s > 0.0) graph.features.row(i) /= s;
  }
}

}  // namespace gsmote
