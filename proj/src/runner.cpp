#include "gsmote/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace gsmote {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double x, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

json report_json(const EvalReport& r) {
  json per_class = json::array();
  for (const auto& c : r.per_class) {
    per_class.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                         {"auc", c.auc_defined ? json(c.auc) : json(nullptr)}});
  }
  return {{"acc", r.accuracy},
          {"macro_auc", r.macro_auc},
          {"macro_f", r.macro_f},
          {"per_class", per_class},
          {"auc_skipped_classes", r.auc_skipped_classes}};
}

}  // namespace

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

AttributedGraph load_dataset(const RunSpec& spec) {
  AttributedGraph graph;
  const DatasetSpec& d = spec.dataset;
  try {
    if (d.is_synthetic()) {
      graph = generate_synthetic_graph(d.synthetic_seed, d.synthetic_n, d.synthetic_m, d.synthetic_d,
                                       d.synthetic_intra_p, d.synthetic_inter_p, d.synthetic_separation);
    } else {
      fs::path dir = d.source;
      if (dir.is_relative() && !spec.base_dir.empty()) dir = spec.base_dir / dir;
      graph = load_graph(dir);
    }
  } catch (const GraphError& e) {
    throw DatasetError(e.what());
  }
  if (spec.experiment.normalize_features) row_normalize_features(graph);
  return graph;
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GSMOTE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

RunManifest run_experiment(const RunSpec& spec, const AttributedGraph& graph) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.config = run_spec_to_json(spec);
  manifest.outcomes.resize(spec.seeds.size());
  std::vector<std::exception_ptr> errors(spec.seeds.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < spec.seeds.size(); i = next++) {
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t seed = spec.seeds[i];
        SplitMasks masks;
        try {
          masks = make_imbalanced_split(graph, spec.experiment.split, seed);
        } catch (const GraphError& e) {
          throw DatasetError(e.what());
        }
        const TrainResult result = train(spec.experiment, graph, masks, seed);
        SeedOutcome& out = manifest.outcomes[i];
        out.seed = seed;
        out.test = result.test;
        out.validation = result.validation;
        out.best_epoch = result.best_epoch;
        out.epochs_run = result.epochs_run;
        out.pretraining = result.pretraining;
        out.history = result.history;
        out.train_size = masks.train.size();
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(spec.seeds.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> acc, auc, f;
  for (const auto& o : manifest.outcomes) {
    acc.push_back(o.test.accuracy);
    auc.push_back(o.test.macro_auc);
    f.push_back(o.test.macro_f);
  }
  manifest.accuracy = summarize(acc);
  manifest.macro_auc = summarize(auc);
  manifest.macro_f = summarize(f);
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return manifest;
}

json manifest_to_json(const RunManifest& m) {
  json seeds = json::array();
  json per_seed = json::array();
  for (const auto& o : m.outcomes) {
    seeds.push_back(o.seed);
    per_seed.push_back({{"seed", o.seed},
                        {"test", report_json(o.test)},
                        {"validation", report_json(o.validation)},
                        {"best_epoch", o.best_epoch},
                        {"epochs_run", o.epochs_run},
                        {"train_size", o.train_size},
                        {"pretrain_epochs_run", o.pretraining.epochs_run},
                        {"pretrain_initial_edge_loss", o.pretraining.initial_edge_loss},
                        {"pretrain_final_edge_loss", o.pretraining.final_edge_loss},
                        {"seconds", o.seconds}});
  }
  auto summary = [](const MetricSummary& s) { return json{{"mean", s.mean}, {"std", s.std}}; };
  return {{"config", m.config},
          {"seeds", seeds},
          {"per_seed", per_seed},
          {"aggregate",
           {{"acc", summary(m.accuracy)}, {"macro_auc", summary(m.macro_auc)}, {"macro_f", summary(m.macro_f)}}},
          {"wall_clock_seconds", m.wall_clock_seconds}};
}

std::string metrics_csv(const RunManifest& m, bool record_timing) {
  std::ostringstream out;
  out << "variant,seed,acc,macro_auc,macro_f,seconds\n";
  std::string variant = m.config.at("variant").get<std::string>();
  const auto mixup = m.config.at("mixup").get<std::string>();
  if (mixup != "off") variant += "+" + mixup;
  for (const auto& o : m.outcomes) {
    out << variant << ',' << o.seed << ',' << fixed(o.test.accuracy) << ',' << fixed(o.test.macro_auc) << ','
        << fixed(o.test.macro_f) << ',' << fixed(record_timing ? o.seconds : 0.0, 3) << '\n';
  }
  return out.str();
}

namespace {

std::string history_csv(const SeedOutcome& o) {
  std::ostringstream out;
  out << "epoch,loss,node_loss,edge_loss,mix_loss,synthetic_nodes,mixed_nodes,val_acc,val_auc,val_f\n";
  for (const auto& r : o.history) {
    out << r.epoch << ',' << fixed(r.loss, 12) << ',' << fixed(r.node_loss, 12) << ',' << fixed(r.edge_loss, 6)
        << ',' << fixed(r.mix_loss, 12) << ',' << r.synthetic_nodes << ',' << r.mixed_nodes << ','
        << fixed(r.val_acc) << ',' << fixed(r.val_auc) << ',' << fixed(r.val_f) << '\n';
  }
  return out.str();
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_run(const RunManifest& manifest, const fs::path& out_dir, bool record_timing) {
  write_atomic(out_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  write_atomic(out_dir / "metrics.csv", metrics_csv(manifest, record_timing));
  for (const auto& o : manifest.outcomes) {
    write_atomic(out_dir / ("history_seed" + std::to_string(o.seed) + ".csv"), history_csv(o));
  }
}

std::vector<RunManifest> sweep(const json& base, const fs::path& base_dir, const std::string& param,
                               const std::vector<std::string>& values, const fs::path& out_dir) {
  if (!is_config_key(param)) throw ConfigError("unknown sweep parameter: " + param);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<RunSpec> specs;
  for (const auto& v : values) {
    json j = base;
    apply_override(j, param, v);
    specs.push_back(run_spec_from_json(j, base_dir));
  }
  std::vector<RunManifest> manifests;
  std::ostringstream summary;
  summary << "param,value,acc_mean,acc_std,macro_auc_mean,macro_auc_std,macro_f_mean,macro_f_std\n";
  std::map<std::string, AttributedGraph> graphs;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const json key_json = run_spec_to_json(specs[i]);
    std::string key = key_json.at("dataset").dump() + key_json.at("normalize_features").dump();
    for (const auto& [k, v] : key_json.items()) {
      if (k.rfind("synthetic_", 0) == 0) key += k + v.dump();
    }
    auto it = graphs.find(key);
    if (it == graphs.end()) it = graphs.emplace(key, load_dataset(specs[i])).first;
    RunManifest m = run_experiment(specs[i], it->second);
    write_run(m, out_dir / (param + "=" + values[i]), specs[i].record_timing);
    summary << param << ',' << values[i] << ',' << fixed(m.accuracy.mean) << ',' << fixed(m.accuracy.std) << ','
            << fixed(m.macro_auc.mean) << ',' << fixed(m.macro_auc.std) << ',' << fixed(m.macro_f.mean) << ','
            << fixed(m.macro_f.std) << '\n';
    manifests.push_back(std::move(m));
  }
  write_atomic(out_dir / "sweep_summary.csv", summary.str());
  return manifests;
}

CoraConversion convert_cora(const fs::path& src, const fs::path& out) {
  const fs::path content_path = src / "cora.content";
  const fs::path cites_path = src / "cora.cites";
  std::ifstream content(content_path);
  if (!content) throw DatasetError("cannot open " + content_path.string());
  std::ifstream cites(cites_path);
  if (!cites) throw DatasetError("cannot open " + cites_path.string());

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(content, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.size() < 3) throw DatasetError("cora.content:" + std::to_string(lineno) + ": too few fields");
    ids.push_back(tokens.front());
    names.push_back(tokens.back());
    std::vector<double> row;
    for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
      char* end = nullptr;
      const double x = std::strtod(tokens[i].c_str(), &end);
      if (end == tokens[i].c_str() || *end != '\0') {
        throw DatasetError("cora.content:" + std::to_string(lineno) + ": non-numeric feature");
      }
      row.push_back(x);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DatasetError("cora.content:" + std::to_string(lineno) + ": feature count differs");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DatasetError("cora.content is empty");

  CoraConversion report;
  report.class_names = names;
  std::sort(report.class_names.begin(), report.class_names.end());
  report.class_names.erase(std::unique(report.class_names.begin(), report.class_names.end()),
                           report.class_names.end());
  std::map<std::string, NodeIndex> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index.emplace(ids[i], static_cast<NodeIndex>(i)).second) {
      throw DatasetError("cora.content: duplicate node id " + ids[i]);
    }
  }
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  while (std::getline(cites, line)) {
    std::istringstream fields(line);
    std::string a, b;
    if (!(fields >> a >> b)) continue;
    ++report.citation_lines;
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      ++report.unknown_endpoints;
      continue;
    }
    edges.emplace_back(ia->second, ib->second);
  }

  const auto n = static_cast<NodeIndex>(rows.size());
  Matrix features(n, static_cast<Eigen::Index>(rows.front().size()));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (NodeIndex v = 0; v < n; ++v) {
    const auto& row = rows[static_cast<std::size_t>(v)];
    for (std::size_t j = 0; j < row.size(); ++j) features(v, static_cast<Eigen::Index>(j)) = row[j];
    labels[static_cast<std::size_t>(v)] = static_cast<int>(
        std::lower_bound(report.class_names.begin(), report.class_names.end(), names[static_cast<std::size_t>(v)]) -
        report.class_names.begin());
  }
  try {
    const AttributedGraph graph =
        make_graph(std::move(features), std::move(labels), static_cast<int>(report.class_names.size()), edges);
    save_graph(graph, out);
    report.nodes = graph.n;
    report.features = graph.feature_dim();
  } catch (const GraphError& e) {
    throw DatasetError(e.what());
  }
  report.classes = static_cast<int>(report.class_names.size());
  return report;
}

}  // namespace gsmote
