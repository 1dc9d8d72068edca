#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsmote/adam.hpp"
#include "gsmote/edgegen.hpp"
#include "gsmote/gnn.hpp"
#include "gsmote/graph.hpp"
#include "gsmote/metrics.hpp"
#include "gsmote/mixup.hpp"
#include "gsmote/smote.hpp"

namespace gsmote {

enum class Variant {
  origin,
  oversample_raw,
  reweight,
  smote_raw,
  embed_smote,
  gsmote_T,
  gsmote_O,
  gsmote_preT,
  gsmote_preO,
};

enum class MixupMode { off, mix, mix_prime };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);
MixupMode parse_mixup_mode(const std::string& name);
std::string to_string(MixupMode m);

bool is_graph_smote(Variant v);
bool uses_pretraining(Variant v);
EdgeMode edge_mode(Variant v);

struct ExperimentConfig {
  Variant variant = Variant::gsmote_preO;
  MixupMode mixup = MixupMode::off;
  BaseModel base_model = BaseModel::graphsage;
  Aggregation aggregation = Aggregation::sum;
  HeadActivation head_activation = HeadActivation::identity;
  int hidden_dim = 64;
  double lambda = 1e-6;
  ScaleMode oversample_mode = ScaleMode::uniform;
  double oversample_scale = 2.0;
  double eta = 0.5;
  MixupConfig mixup_config;
  double learning_rate = 0.001;
  double weight_decay = 5e-4;
  int max_epochs = 5000;
  /// Stop when validation macro-F has not improved for this many epochs (0 = never).
  int patience = 0;
  int pretrain_epochs = 200;
  int pretrain_window = 20;
  double pretrain_min_improvement = 1e-3;
  bool normalize_features = false;
  SplitOptions split;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

struct ModelParams {
  SageBlock encoder;
  SageBlock classifier;
  ClassifierHead head;
  EdgeGenerator edge_gen;

  /// Initializes W1, W2, Wc, S in that order from `rng`.
  static ModelParams init(Eigen::Index d, Eigen::Index hidden, int m, BaseModel base, Rng& rng);

  /// Deep copy with fresh leaves.
  ModelParams clone() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double node_loss = 0.0;
  double edge_loss = 0.0;
  double mix_loss = 0.0;
  std::size_t synthetic_nodes = 0;
  std::size_t mixed_nodes = 0;
  double val_acc = 0.0;
  double val_auc = 0.0;
  double val_f = 0.0;
};

/// Per-graph quantities reused every epoch.
struct TrainingContext {
  const AttributedGraph* graph = nullptr;
  const SplitMasks* masks = nullptr;
  SparseHandle encoder_input;
  std::vector<int> train_labels;  // kUnknownLabel outside the train mask
  ClassStats stats;
  OversamplePlan plan;
  std::vector<double> class_weights;  // reweight baseline only

  static TrainingContext build(const AttributedGraph& graph, const SplitMasks& masks,
                               const ExperimentConfig& config);
};

struct Optimizers {
  AdamState network;  // W1, W2, Wc
  AdamState edge;     // S

  static Optimizers make(const ExperimentConfig& config);
};

struct PretrainReport {
  int epochs_run = 0;
  double initial_edge_loss = 0.0;
  double final_edge_loss = 0.0;
};

/// Adam on L_edge alone over W1 and S; the classifier is untouched.
PretrainReport pretrain(ModelParams& params, const TrainingContext& ctx, const ExperimentConfig& config);

struct EpochObjective {
  ad::Var loss;
  EpochRecord record;
};

/// Builds this epoch's augmented graph and total loss without stepping.
/// Draws from `rng` exactly as train_epoch does.
EpochObjective epoch_objective(const ModelParams& params, const TrainingContext& ctx,
                               const ExperimentConfig& config, const Matrix& last_probs, Rng& rng);

/// One optimization step. `last_probs` are the current model's predictions on
/// the real graph, used for pseudo-labels.
EpochRecord train_epoch(ModelParams& params, Optimizers& opt, const TrainingContext& ctx,
                        const ExperimentConfig& config, const Matrix& last_probs, Rng& rng);

/// Class probabilities on the real graph, without recording gradients.
Matrix predict(const ModelParams& params, const TrainingContext& ctx, const ExperimentConfig& config);

struct TrainResult {
  ModelParams best;
  int best_epoch = 0;
  int epochs_run = 0;
  EvalReport validation;
  EvalReport test;
  std::vector<EpochRecord> history;
  PretrainReport pretraining;
};

TrainResult train(const ExperimentConfig& config, const AttributedGraph& graph, const SplitMasks& masks,
                  std::uint64_t seed);

/// train() with the variant replaced by one of the five baselines.
TrainResult run_baseline(Variant kind, const AttributedGraph& graph, const SplitMasks& masks,
                         ExperimentConfig config, std::uint64_t seed);

/// Input-space augmentation used by oversample_raw and smote_raw: appended
/// nodes copy their seed node's adjacency row and join the train mask.
struct RawAugmentation {
  AttributedGraph graph;
  NodeSet train;
  SyntheticBatch batch;
};

RawAugmentation augment_raw(const AttributedGraph& graph, const NodeSet& train, const OversamplePlan& plan,
                            bool interpolate_features, Rng& rng);

}  // namespace gsmote
