#include "gsmote/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsmote {

using ad::Var;

namespace {

constexpr std::uint64_t kTrainStreamSalt = 0xA5A5F00DC0FFEE11ULL;

struct NamedVariant {
  const char* name;
  Variant value;
};

constexpr NamedVariant kVariants[] = {
    {"origin", Variant::origin},         {"oversample_raw", Variant::oversample_raw},
    {"reweight", Variant::reweight},     {"smote_raw", Variant::smote_raw},
    {"embed_smote", Variant::embed_smote}, {"gsmote_T", Variant::gsmote_T},
    {"gsmote_O", Variant::gsmote_O},     {"gsmote_preT", Variant::gsmote_preT},
    {"gsmote_preO", Variant::gsmote_preO},
};

}  // namespace

Variant parse_variant(const std::string& name) {
  for (const auto& v : kVariants) {
    if (name == v.name) return v.value;
  }
  throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(Variant v) {
  for (const auto& entry : kVariants) {
    if (entry.value == v) return entry.name;
  }
  return "?";
}

MixupMode parse_mixup_mode(const std::string& name) {
  if (name == "off") return MixupMode::off;
  if (name == "mix") return MixupMode::mix;
  if (name == "mix_prime") return MixupMode::mix_prime;
  throw std::invalid_argument("unknown mixup mode: " + name);
}

std::string to_string(MixupMode m) {
  switch (m) {
    case MixupMode::off: return "off";
    case MixupMode::mix: return "mix";
    case MixupMode::mix_prime: return "mix_prime";
  }
  return "?";
}

bool is_graph_smote(Variant v) {
  return v == Variant::gsmote_T || v == Variant::gsmote_O || v == Variant::gsmote_preT ||
         v == Variant::gsmote_preO;
}

bool uses_pretraining(Variant v) { return v == Variant::gsmote_preT || v == Variant::gsmote_preO; }

EdgeMode edge_mode(Variant v) {
  return v == Variant::gsmote_O || v == Variant::gsmote_preO ? EdgeMode::soft : EdgeMode::threshold;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (!(lambda >= 0.0)) fail("lambda must be nonnegative");
  if (max_epochs < 1) fail("max_epochs must be at least 1");
  if (hidden_dim < 1) fail("hidden_dim must be at least 1");
  if (uses_pretraining(variant) && pretrain_epochs < 1) fail("pretraining variants need pretrain_epochs >= 1");
  if (pretrain_window < 1) fail("pretrain_window must be at least 1");
  if (!(eta >= 0.0 && eta < 1.0)) fail("eta must lie in [0, 1)");
  if (oversample_mode == ScaleMode::uniform && !(oversample_scale > 0.0)) fail("oversample_scale must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be nonnegative");
  if (patience < 0) fail("patience must be nonnegative");
  if (split.minority_count < 0) fail("minority_count must be nonnegative");
  if (!(split.imbalance_ratio > 0.0 && split.imbalance_ratio <= 1.0)) fail("imbalance_ratio must lie in (0, 1]");
  if (split.majority_train_size * split.imbalance_ratio < 1.0) fail("majority_train_size * imbalance_ratio must be >= 1");
  if (!(split.validation_fraction >= 0.0 && split.validation_fraction <= 1.0)) fail("validation_fraction must lie in [0, 1]");
  mixup_config.validate();
}

ModelParams ModelParams::init(Eigen::Index d, Eigen::Index hidden, int m, BaseModel base, Rng& rng) {
  const Eigen::Index fan = base == BaseModel::gcn ? 1 : 2;
  ModelParams p;
  p.encoder.weight = Var::parameter(glorot_uniform_init(fan * d, hidden, rng));
  p.classifier.weight = Var::parameter(glorot_uniform_init(fan * hidden, hidden, rng));
  p.head.weight = Var::parameter(glorot_uniform_init(fan * hidden, m, rng));
  p.edge_gen.S = Var::parameter(glorot_uniform_init(hidden, hidden, rng));
  return p;
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.encoder.weight = Var::parameter(encoder.weight.data());
  p.classifier.weight = Var::parameter(classifier.weight.data());
  p.head.weight = Var::parameter(head.weight.data());
  p.edge_gen.S = Var::parameter(edge_gen.S.data());
  return p;
}

TrainingContext TrainingContext::build(const AttributedGraph& graph, const SplitMasks& masks,
                                       const ExperimentConfig& config) {
  TrainingContext ctx;
  ctx.graph = &graph;
  ctx.masks = &masks;
  ctx.encoder_input = gsmote::encoder_input(graph, config.base_model, config.aggregation);
  ctx.train_labels = train_only_labels(graph.labels, masks.train, graph.n);
  ctx.stats = class_stats(graph, masks.train);
  ctx.plan = build_plan(ctx.stats, config.oversample_mode, config.oversample_scale);
  const auto m = static_cast<double>(graph.m);
  const auto total = static_cast<double>(ctx.stats.total());
  for (const std::size_t size : ctx.stats.sizes) ctx.class_weights.push_back(total / (m * static_cast<double>(size)));
  return ctx;
}

Optimizers Optimizers::make(const ExperimentConfig& config) {
  Optimizers opt;
  for (AdamState* s : {&opt.network, &opt.edge}) {
    s->learning_rate = config.learning_rate;
    s->weight_decay = config.weight_decay;
  }
  return opt;
}

PretrainReport pretrain(ModelParams& params, const TrainingContext& ctx, const ExperimentConfig& config) {
  if (config.pretrain_epochs < 1) throw std::invalid_argument("pretrain: epochs must be at least 1");
  Optimizers opt = Optimizers::make(config);
  PretrainReport report;
  std::vector<double> losses;
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    const Var h1 = encode(ctx.encoder_input, params.encoder.weight);
    const Var loss = edge_loss(params.edge_gen, h1, ctx.graph->adjacency);
    losses.push_back(loss.item());
    ad::backward(loss);
    Var encoder[] = {params.encoder.weight};
    Var edge[] = {params.edge_gen.S};
    adam_step(encoder, opt.network);
    adam_step(edge, opt.edge);
    report.epochs_run = epoch + 1;
    const auto w = static_cast<std::size_t>(config.pretrain_window);
    if (losses.size() > w) {
      const double before = losses[losses.size() - 1 - w];
      if (before - losses.back() < config.pretrain_min_improvement * before) break;
    }
  }
  report.initial_edge_loss = losses.front();
  {
    ad::NoGradGuard guard;
    report.final_edge_loss =
        edge_loss(params.edge_gen, encode(ctx.encoder_input, params.encoder.weight), ctx.graph->adjacency).item();
  }
  return report;
}

RawAugmentation augment_raw(const AttributedGraph& graph, const NodeSet& train, const OversamplePlan& plan,
                            bool interpolate_features, Rng& rng) {
  RawAugmentation out;
  out.batch = interpolate_features ? oversample(graph.features, graph.labels, train, plan, rng)
                                   : duplicate(graph.features, graph.labels, train, plan, rng);
  const auto k = static_cast<NodeIndex>(out.batch.size());
  AttributedGraph& g = out.graph;
  g.n = graph.n + k;
  g.m = graph.m;
  g.features.resize(g.n, graph.features.cols());
  g.features.topRows(graph.n) = graph.features;
  if (k > 0) g.features.bottomRows(k) = out.batch.embeddings;
  g.labels = graph.labels;
  g.labels.insert(g.labels.end(), out.batch.labels.begin(), out.batch.labels.end());

  const SparseMatrix& a = *graph.adjacency;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros()) + 2 * static_cast<std::size_t>(k) * 8);
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) entries.emplace_back(r, it.col(), it.value());
  }
  for (NodeIndex i = 0; i < k; ++i) {
    const NodeIndex seed = out.batch.seeds[static_cast<std::size_t>(i)];
    for (SparseMatrix::InnerIterator it(a, seed); it; ++it) {
      entries.emplace_back(graph.n + i, it.col(), 1.0);
      entries.emplace_back(it.col(), graph.n + i, 1.0);
    }
  }
  auto adjacency = std::make_shared<SparseMatrix>(g.n, g.n);
  adjacency->setFromTriplets(entries.begin(), entries.end());
  g.adjacency = std::move(adjacency);

  out.train = train;
  for (NodeIndex i = 0; i < k; ++i) out.train.push_back(graph.n + i);
  return out;
}

namespace {

Var second_block(const ModelParams& params, const AugmentedGraph& g, const ExperimentConfig& config) {
  if (config.base_model == BaseModel::gcn) return gcn_forward(params.classifier.weight, g, g.embeddings);
  return sage_forward(params.classifier, g, g.embeddings, config.aggregation);
}

Var head_probs(const ModelParams& params, const Var& h2, const AugmentedGraph& g, const ExperimentConfig& config) {
  return classify(params.head, h2, g, config.base_model, config.aggregation, config.head_activation);
}

/// Origin-style forward on any real graph.
Var real_forward(const ModelParams& params, const SparseHandle& input, const SparseHandle& adjacency,
                 std::vector<int> labels, const ExperimentConfig& config) {
  const Var h1 = encode(input, params.encoder.weight);
  const AugmentedGraph g = AugmentedGraph::with_embeddings(adjacency, h1, std::move(labels));
  return head_probs(params, second_block(params, g, config), g, config);
}

NodeSet appended_range(NodeIndex begin, std::size_t count) {
  NodeSet out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = begin + static_cast<NodeIndex>(i);
  return out;
}

}  // namespace

Matrix predict(const ModelParams& params, const TrainingContext& ctx, const ExperimentConfig& config) {
  ad::NoGradGuard guard;
  return real_forward(params, ctx.encoder_input, ctx.graph->adjacency, ctx.train_labels, config).data();
}

EpochObjective epoch_objective(const ModelParams& params, const TrainingContext& ctx,
                               const ExperimentConfig& config, const Matrix& last_probs, Rng& rng) {
  const AttributedGraph& graph = *ctx.graph;
  const NodeSet& train = ctx.masks->train;
  const Variant variant = config.variant;
  EpochRecord record;

  Var probs;
  std::vector<int> loss_labels;
  NodeSet loss_mask = train;
  std::vector<double> row_weights;
  Var h1_real;
  NodeSet mixed_rows;
  Matrix mixed_targets;

  if (variant == Variant::oversample_raw || variant == Variant::smote_raw) {
    RawAugmentation raw = augment_raw(graph, train, ctx.plan, variant == Variant::smote_raw, rng);
    const SparseHandle input = encoder_input(raw.graph, config.base_model, config.aggregation);
    loss_labels = train_only_labels(raw.graph.labels, raw.train, raw.graph.n);
    probs = real_forward(params, input, raw.graph.adjacency, loss_labels, config);
    loss_mask = raw.train;
    record.synthetic_nodes = raw.batch.size();
  } else if (variant == Variant::embed_smote) {
    h1_real = encode(ctx.encoder_input, params.encoder.weight);
    const AugmentedGraph real = AugmentedGraph::with_embeddings(graph.adjacency, h1_real, ctx.train_labels);
    const Var h2 = second_block(params, real, config);
    const SyntheticBatch batch = oversample(h2.data(), ctx.train_labels, train, ctx.plan, rng);
    AugmentedGraph g = AugmentedGraph::with_embeddings(graph.adjacency, h2, ctx.train_labels);
    if (batch.size() > 0) {
      g.append(Var{}, static_cast<Eigen::Index>(batch.size()), Provenance::smote,
               ad::mix_rows(h2, batch.seeds, batch.neighbors, batch.deltas), batch.labels);
    }
    probs = head_probs(params, g.embeddings, g, config);
    loss_labels = g.labels;
    const NodeSet extra = appended_range(graph.n, batch.size());
    loss_mask.insert(loss_mask.end(), extra.begin(), extra.end());
    record.synthetic_nodes = batch.size();
  } else {
    h1_real = encode(ctx.encoder_input, params.encoder.weight);
    AugmentedGraph g = AugmentedGraph::with_embeddings(graph.adjacency, h1_real, ctx.train_labels);
    std::size_t synthetic = 0;
    if (is_graph_smote(variant) && ctx.plan.total() > 0) {
      const SyntheticBatch batch = oversample(h1_real.data(), ctx.train_labels, train, ctx.plan, rng);
      const Var rows = ad::mix_rows(h1_real, batch.seeds, batch.neighbors, batch.deltas);
      if (edge_mode(variant) == EdgeMode::soft) {
        augment_soft(g, params.edge_gen, rows, batch.labels);
      } else {
        augment_threshold(g, params.edge_gen, rows, batch.labels, config.eta);
      }
      synthetic = batch.size();
    }
    if (config.mixup != MixupMode::off) {
      const std::vector<int> effective =
          config.mixup == MixupMode::mix
              ? pseudo_labels(last_probs, graph.labels, train, config.mixup_config.threshold)
              : ctx.train_labels;
      const auto count = static_cast<std::size_t>(
          std::lround(config.mixup_config.mixup_ratio * static_cast<double>(train.size())));
      const MixedBatch mixed = mix_nodes(h1_real.data(), effective, graph.m, ctx.masks->minority_classes,
                                         count, config.mixup_config, rng);
      if (mixed.size() > 0) {
        const Var rows = ad::mix_rows(h1_real, mixed.first, mixed.second, mixed.deltas);
        insert_mixed(g, params.edge_gen, rows, mixed, config.mixup_config.insertion, edge_mode(variant),
                     config.eta);
        mixed_rows = appended_range(graph.n + static_cast<NodeIndex>(synthetic), mixed.size());
        mixed_targets = mixed.targets;
      }
      record.mixed_nodes = mixed.size();
    }
    const Var h2 = second_block(params, g, config);
    probs = head_probs(params, h2, g, config);
    loss_labels = g.labels;
    const NodeSet extra = appended_range(graph.n, synthetic);
    loss_mask.insert(loss_mask.end(), extra.begin(), extra.end());
    record.synthetic_nodes = synthetic;
  }

  if (variant == Variant::reweight) {
    row_weights.reserve(loss_mask.size());
    double total = 0.0;
    for (const NodeIndex v : loss_mask) {
      row_weights.push_back(ctx.class_weights[static_cast<std::size_t>(loss_labels[static_cast<std::size_t>(v)])]);
      total += row_weights.back();
    }
    const double norm = static_cast<double>(row_weights.size()) / total;
    for (double& w : row_weights) w *= norm;
  }

  const Var l_node = node_loss(probs, loss_labels, loss_mask, row_weights);
  Var loss = l_node;
  record.node_loss = l_node.item();
  if (is_graph_smote(variant) && config.lambda > 0.0) {
    const Var l_edge = edge_loss(params.edge_gen, h1_real, graph.adjacency);
    record.edge_loss = l_edge.item();
    loss = ad::add(loss, ad::scale(l_edge, config.lambda));
  }
  if (!mixed_rows.empty()) {
    const Var l_mix = mix_loss(probs, mixed_targets, mixed_rows);
    record.mix_loss = l_mix.item();
    loss = ad::add(loss, ad::scale(l_mix, config.mixup_config.lambda2));
  }
  record.loss = loss.item();
  return {loss, record};
}

EpochRecord train_epoch(ModelParams& params, Optimizers& opt, const TrainingContext& ctx,
                        const ExperimentConfig& config, const Matrix& last_probs, Rng& rng) {
  const EpochObjective objective = epoch_objective(params, ctx, config, last_probs, rng);
  ad::backward(objective.loss);
  Var network[] = {params.encoder.weight, params.classifier.weight, params.head.weight};
  adam_step(network, opt.network);
  if (params.edge_gen.S.has_grad()) {
    Var edge[] = {params.edge_gen.S};
    adam_step(edge, opt.edge);
  }
  return objective.record;
}

TrainResult train(const ExperimentConfig& config, const AttributedGraph& graph, const SplitMasks& masks,
                  std::uint64_t seed) {
  config.validate();
  const TrainingContext ctx = TrainingContext::build(graph, masks, config);
  Rng init_rng(seed);
  ModelParams params = ModelParams::init(graph.feature_dim(), config.hidden_dim, graph.m, config.base_model, init_rng);
  Rng rng(seed ^ kTrainStreamSalt);

  TrainResult result;
  if (uses_pretraining(config.variant)) result.pretraining = pretrain(params, ctx, config);

  Optimizers opt = Optimizers::make(config);
  Matrix probs = predict(params, ctx, config);
  double best_f = -1.0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord record = train_epoch(params, opt, ctx, config, probs, rng);
    record.epoch = epoch;
    probs = predict(params, ctx, config);
    const EvalReport val = evaluate(probs, graph.labels, masks.validation);
    record.val_acc = val.accuracy;
    record.val_auc = val.macro_auc;
    record.val_f = val.macro_f;
    result.history.push_back(record);
    result.epochs_run = epoch;
    if (!std::isfinite(record.loss)) break;
    if (val.macro_f > best_f) {
      best_f = val.macro_f;
      result.best = params.clone();
      result.best_epoch = epoch;
      result.validation = val;
    }
    if (config.patience > 0 && epoch - result.best_epoch >= config.patience) break;
  }
  if (result.best_epoch == 0) result.best = params.clone();
  result.test = evaluate(predict(result.best, ctx, config), graph.labels, masks.test);
  return result;
}

TrainResult run_baseline(Variant kind, const AttributedGraph& graph, const SplitMasks& masks,
                         ExperimentConfig config, std::uint64_t seed) {
  switch (kind) {
    case Variant::origin:
    case Variant::oversample_raw:
    case Variant::reweight:
    case Variant::smote_raw:
    case Variant::embed_smote:
      break;
    default:
      throw std::invalid_argument("run_baseline: not a baseline: " + to_string(kind));
  }
  config.variant = kind;
  config.mixup = MixupMode::off;
  return train(config, graph, masks, seed);
}

}  // namespace gsmote
