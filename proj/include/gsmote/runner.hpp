#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsmote/config.hpp"
#include "gsmote/trainer.hpp"

namespace gsmote {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  EvalReport test;
  EvalReport validation;
  int best_epoch = 0;
  int epochs_run = 0;
  PretrainReport pretraining;
  double seconds = 0.0;
  std::size_t train_size = 0;
  std::vector<EpochRecord> history;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct RunManifest {
  nlohmann::json config;
  std::vector<SeedOutcome> outcomes;
  MetricSummary accuracy;
  MetricSummary macro_auc;
  MetricSummary macro_f;
  double wall_clock_seconds = 0.0;
};

MetricSummary summarize(const std::vector<double>& values);

/// Loads or generates the dataset named by the spec. Throws DatasetError.
AttributedGraph load_dataset(const RunSpec& spec);

/// Worker cap: GSMOTE_THREADS when set and positive, else hardware concurrency.
unsigned worker_count();

/// Trains and evaluates every seed; seeds run on up to worker_count() threads.
RunManifest run_experiment(const RunSpec& spec, const AttributedGraph& graph);

/// Writes manifest.json, metrics.csv and one history CSV per seed.
void write_run(const RunManifest& manifest, const std::filesystem::path& out_dir, bool record_timing);

nlohmann::json manifest_to_json(const RunManifest& manifest);
std::string metrics_csv(const RunManifest& manifest, bool record_timing);

/// Runs `base` once per value of `param`, writing each run under
/// out_dir/<param>=<value>/ and a sweep_summary.csv in out_dir.
std::vector<RunManifest> sweep(const nlohmann::json& base, const std::filesystem::path& base_dir,
                               const std::string& param, const std::vector<std::string>& values,
                               const std::filesystem::path& out_dir);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct CoraConversion {
  NodeIndex nodes = 0;
  NodeIndex features = 0;
  int classes = 0;
  std::size_t citation_lines = 0;
  std::size_t unknown_endpoints = 0;
  std::vector<std::string> class_names;
};

/// Converts cora.content / cora.cites into the dataset directory format.
/// Class indices follow the sorted class names; nodes keep file order.
CoraConversion convert_cora(const std::filesystem::path& src, const std::filesystem::path& out);

}  // namespace gsmote
