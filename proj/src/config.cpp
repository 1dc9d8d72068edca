#include "gsmote/config.hpp"

#include <fstream>

namespace gsmote {

using nlohmann::json;

namespace {

std::string scale_mode_name(ScaleMode m) { return m == ScaleMode::uniform ? "uniform" : "class_balanced"; }

ScaleMode parse_scale_mode(const std::string& s) {
  if (s == "uniform") return ScaleMode::uniform;
  if (s == "class_balanced") return ScaleMode::class_balanced;
  throw ConfigError("unknown oversample_mode: " + s);
}

std::string insertion_name(MixInsertion i) {
  switch (i) {
    case MixInsertion::vanilla: return "vanilla";
    case MixInsertion::heuristic: return "heuristic";
    case MixInsertion::predicted: return "predicted";
  }
  return "?";
}

BaseModel parse_base(const std::string& s) {
  if (s == "graphsage") return BaseModel::graphsage;
  if (s == "gcn") return BaseModel::gcn;
  throw ConfigError("unknown base_model: " + s);
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "sum") return Aggregation::sum;
  if (s == "mean") return Aggregation::mean;
  throw ConfigError("unknown aggregation: " + s);
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

json run_spec_to_json(const RunSpec& spec) {
  const ExperimentConfig& c = spec.experiment;
  const DatasetSpec& d = spec.dataset;
  return json{
      {"variant", to_string(c.variant)},
      {"mixup", to_string(c.mixup)},
      {"base_model", c.base_model == BaseModel::gcn ? "gcn" : "graphsage"},
      {"aggregation", c.aggregation == Aggregation::mean ? "mean" : "sum"},
      {"head_activation", c.head_activation == HeadActivation::identity ? "identity" : "relu"},
      {"hidden_dim", c.hidden_dim},
      {"lambda", c.lambda},
      {"lambda2", c.mixup_config.lambda2},
      {"oversample_mode", scale_mode_name(c.oversample_mode)},
      {"oversample_scale", c.oversample_scale},
      {"eta", c.eta},
      {"mixup_ratio", c.mixup_config.mixup_ratio},
      {"mixup_b", c.mixup_config.b},
      {"mixup_threshold", c.mixup_config.threshold},
      {"mixup_partner", c.mixup_config.majority_partner ? "majority" : "any"},
      {"mixup_insertion", insertion_name(c.mixup_config.insertion)},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"max_epochs", c.max_epochs},
      {"patience", c.patience},
      {"pretrain_epochs", c.pretrain_epochs},
      {"pretrain_window", c.pretrain_window},
      {"pretrain_min_improvement", c.pretrain_min_improvement},
      {"normalize_features", c.normalize_features},
      {"minority_count", c.split.minority_count},
      {"imbalance_ratio", c.split.imbalance_ratio},
      {"majority_train_size", c.split.majority_train_size},
      {"validation_fraction", c.split.validation_fraction},
      {"validation_per_class", c.split.validation_per_class},
      {"test_per_class", c.split.test_per_class},
      {"seeds", spec.seeds},
      {"record_timing", spec.record_timing},
      {"dataset", d.source},
      {"synthetic_n", d.synthetic_n},
      {"synthetic_m", d.synthetic_m},
      {"synthetic_d", d.synthetic_d},
      {"synthetic_intra_p", d.synthetic_intra_p},
      {"synthetic_inter_p", d.synthetic_inter_p},
      {"synthetic_separation", d.synthetic_separation},
      {"synthetic_seed", d.synthetic_seed},
  };
}

json default_config_json() { return run_spec_to_json(RunSpec{}); }

bool is_config_key(const std::string& key) { return default_config_json().contains(key); }

RunSpec run_spec_from_json(const json& input, const std::filesystem::path& base_dir) {
  if (!input.is_object()) throw ConfigError("config must be a JSON object");
  json j = default_config_json();
  for (const auto& [key, value] : input.items()) {
    if (!j.contains(key)) throw ConfigError("unknown config key: " + key);
    j[key] = value;
  }
  RunSpec spec;
  spec.base_dir = base_dir;
  ExperimentConfig& c = spec.experiment;
  try {
    c.variant = parse_variant(get<std::string>(j, "variant"));
    c.mixup = parse_mixup_mode(get<std::string>(j, "mixup"));
    c.mixup_config.insertion = parse_insertion(get<std::string>(j, "mixup_insertion"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.base_model = parse_base(get<std::string>(j, "base_model"));
  c.aggregation = parse_aggregation(get<std::string>(j, "aggregation"));
  const auto activation = get<std::string>(j, "head_activation");
  if (activation != "relu" && activation != "identity") throw ConfigError("head_activation must be 'relu' or 'identity'");
  c.head_activation = activation == "relu" ? HeadActivation::relu : HeadActivation::identity;
  c.hidden_dim = get<int>(j, "hidden_dim");
  c.lambda = get<double>(j, "lambda");
  c.mixup_config.lambda2 = get<double>(j, "lambda2");
  c.oversample_mode = parse_scale_mode(get<std::string>(j, "oversample_mode"));
  c.oversample_scale = get<double>(j, "oversample_scale");
  c.eta = get<double>(j, "eta");
  c.mixup_config.mixup_ratio = get<double>(j, "mixup_ratio");
  c.mixup_config.b = get<double>(j, "mixup_b");
  c.mixup_config.threshold = get<double>(j, "mixup_threshold");
  const auto partner = get<std::string>(j, "mixup_partner");
  if (partner != "majority" && partner != "any") throw ConfigError("mixup_partner must be 'majority' or 'any'");
  c.mixup_config.majority_partner = partner == "majority";
  c.mixup_config.use_pseudo = c.mixup == MixupMode::mix;
  c.learning_rate = get<double>(j, "learning_rate");
  c.weight_decay = get<double>(j, "weight_decay");
  c.max_epochs = get<int>(j, "max_epochs");
  c.patience = get<int>(j, "patience");
  c.pretrain_epochs = get<int>(j, "pretrain_epochs");
  c.pretrain_window = get<int>(j, "pretrain_window");
  c.pretrain_min_improvement = get<double>(j, "pretrain_min_improvement");
  c.normalize_features = get<bool>(j, "normalize_features");
  c.split.minority_count = get<int>(j, "minority_count");
  c.split.imbalance_ratio = get<double>(j, "imbalance_ratio");
  c.split.majority_train_size = get<int>(j, "majority_train_size");
  c.split.validation_fraction = get<double>(j, "validation_fraction");
  c.split.validation_per_class = get<int>(j, "validation_per_class");
  c.split.test_per_class = get<int>(j, "test_per_class");
  spec.seeds = get<std::vector<std::uint64_t>>(j, "seeds");
  if (spec.seeds.empty()) throw ConfigError("seeds must not be empty");
  spec.record_timing = get<bool>(j, "record_timing");
  DatasetSpec& d = spec.dataset;
  d.source = get<std::string>(j, "dataset");
  d.synthetic_n = get<NodeIndex>(j, "synthetic_n");
  d.synthetic_m = get<int>(j, "synthetic_m");
  d.synthetic_d = get<NodeIndex>(j, "synthetic_d");
  d.synthetic_intra_p = get<double>(j, "synthetic_intra_p");
  d.synthetic_inter_p = get<double>(j, "synthetic_inter_p");
  d.synthetic_separation = get<double>(j, "synthetic_separation");
  d.synthetic_seed = get<std::uint64_t>(j, "synthetic_seed");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

json load_config_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
}

RunSpec load_run_spec(const std::filesystem::path& file) {
  return run_spec_from_json(load_config_json(file), file.parent_path());
}

void apply_override(json& j, const std::string& key, const std::string& value) {
  if (!is_config_key(key)) throw ConfigError("unknown config key: " + key);
  json parsed = json::parse(value, nullptr, false);
  j[key] = parsed.is_discarded() ? json(value) : parsed;
}

}  // namespace gsmote
