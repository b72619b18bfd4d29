#include "gvhoi/config.hpp"

#include <cmath>
#include <cstdio>

#include "gvhoi/core/rng.hpp"

namespace gvhoi {

Json default_config() {
  return Json::parse(R"({
    "dataset": {
      "source": "synthetic",
      "preset": "tiny",
      "synth_seed": 0,
      "visual_dim": 64,
      "protocol": "fixed-test-subjects",
      "test_subjects": [],
      "train_on": "train",
      "fold": 0,
      "subsample": 1
    },
    "model": {"c1": 128, "c2": 256, "c3": 512, "hidden": 0, "heads": 1},
    "use_gat": true,
    "use_caf": true,
    "use_ieg": true,
    "object_count_cap": -1,
    "geometric": {"gat_scoring": "v1", "include_self_in_sum": false, "temporal_mode": "channel", "leaky_slope": 0.2},
    "fusion": {"variant": "d", "pooling": "time", "reduction": 16, "min_reduced": 4},
    "ieg": {"lambda": 0.5, "zero_neighbor_context": false, "context": "channel_gap", "query": "neighbor"},
    "head": {"boundary_mode": "concat"},
    "gumbel": {"temperature": 1.0, "anneal_rate": 1e-4, "min_temperature": 0.1, "hard": true},
    "optimizer": {"name": "adamw", "lr": 1e-4, "batch": 16, "weight_decay": 0.01, "beta1": 0.9, "beta2": 0.999,
                  "eps": 1e-8, "grad_clip": 0.0},
    "stages": {"stage1_steps": 1000, "stage2_steps": 1000},
    "seed": 0,
    "log_every": 50
  })");
}

namespace {

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() || a.is_number_unsigned()) || b.is_number_integer() || b.is_number_unsigned();
  return a.type() == b.type();
}

void set_leaf(Json& cfg, const std::string& dotted, Json value) {
  Json* node = &cfg;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', pos);
    const std::string key = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || !node->contains(key)) throw ConfigError("unknown config key '" + dotted + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (node->is_object()) throw ConfigError("config key '" + dotted + "' is a section, not a value");
  if (!same_kind(*node, value)) {
    throw ConfigError("config key '" + dotted + "' expects " + std::string(node->type_name()) + ", got " + value.dump());
  }
  *node = std::move(value);
}

void merge_into(Json& cfg, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config patch must be a JSON object");
  for (const auto& [k, v] : patch.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      merge_into(cfg, v, key);
    } else {
      set_leaf(cfg, key, v);
    }
  }
}

template <class T>
T get(const Json& cfg, const char* section, const char* key) {
  return cfg.at(section).at(key).get<T>();
}

}  // namespace

void apply_override(Json& cfg, const std::string& dotted_key, const std::string& value) {
  Json v;
  try {
    v = Json::parse(value);
  } catch (const Json::exception&) {
    v = value;
  }
  set_leaf(cfg, dotted_key, std::move(v));
}

void merge_config(Json& cfg, const Json& patch) { merge_into(cfg, patch, ""); }

std::string config_hash(const Json& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(CounterRng::hash_string(cfg.dump())));
  return buf;
}

ModelConfig model_config(const Json& cfg, const DataShape& shape) {
  ModelConfig m;
  m.keypoints = shape.keypoints;
  m.visual_dim = shape.visual_dim;
  m.human_slots = shape.human_slots;
  m.object_slots = shape.object_slots;
  m.n_sub_activities = shape.n_sub_activities;
  m.n_affordances = shape.n_affordances;

  auto& g = m.geometric;
  g.c1 = get<int>(cfg, "model", "c1");
  g.c2 = get<int>(cfg, "model", "c2");
  g.heads = get<int>(cfg, "model", "heads");
  g.use_gat = cfg.at("use_gat").get<bool>();
  g.include_self_in_sum = get<bool>(cfg, "geometric", "include_self_in_sum");
  const auto scoring = get<std::string>(cfg, "geometric", "gat_scoring");
  if (scoring == "v1") g.scoring = kernels::GatScoring::v1;
  else if (scoring == "v2") g.scoring = kernels::GatScoring::v2;
  else throw ConfigError("geometric.gat_scoring must be v1 or v2");
  const auto temporal = get<std::string>(cfg, "geometric", "temporal_mode");
  if (temporal == "channel") g.temporal = TemporalMode::channel;
  else if (temporal == "depthwise3") g.temporal = TemporalMode::depthwise3;
  else throw ConfigError("geometric.temporal_mode must be channel or depthwise3");
  g.leaky_slope = get<double>(cfg, "geometric", "leaky_slope");

  auto& f = m.fusion;
  f.variant = fusion_variant_from_string(get<std::string>(cfg, "fusion", "variant"));
  const auto pooling = get<std::string>(cfg, "fusion", "pooling");
  if (pooling == "time") f.pooling = FusionPooling::time;
  else if (pooling == "time_entity") f.pooling = FusionPooling::time_entity;
  else throw ConfigError("fusion.pooling must be time or time_entity");
  f.use_caf = cfg.at("use_caf").get<bool>();
  f.c3 = get<int>(cfg, "model", "c3");
  f.reduction = get<int>(cfg, "fusion", "reduction");
  f.min_reduced = get<int>(cfg, "fusion", "min_reduced");

  auto& i = m.ieg;
  i.enabled = cfg.at("use_ieg").get<bool>();
  i.lambda = get<double>(cfg, "ieg", "lambda");
  if (i.lambda < 0.0 || i.lambda > 1.0) throw ConfigError("ieg.lambda must lie in [0, 1]");
  i.zero_neighbor_context = get<bool>(cfg, "ieg", "zero_neighbor_context");
  const auto context = get<std::string>(cfg, "ieg", "context");
  if (context == "channel_gap") i.context = NeighborContext::channel_gap;
  else if (context == "channel") i.context = NeighborContext::channel;
  else throw ConfigError("ieg.context must be channel_gap or channel");
  const auto query = get<std::string>(cfg, "ieg", "query");
  if (query == "neighbor") i.query = kernels::NeighborQuery::neighbor;
  else if (query == "target") i.query = kernels::NeighborQuery::target;
  else throw ConfigError("ieg.query must be neighbor or target");

  auto& h = m.head;
  h.hidden = get<int>(cfg, "model", "hidden");
  const auto mode = get<std::string>(cfg, "head", "boundary_mode");
  if (mode == "concat") h.boundary_mode = BoundaryMode::concat;
  else if (mode == "none") h.boundary_mode = BoundaryMode::none;
  else throw ConfigError("head.boundary_mode must be concat or none");
  h.gumbel.temperature = get<double>(cfg, "gumbel", "temperature");
  h.gumbel.anneal_rate = get<double>(cfg, "gumbel", "anneal_rate");
  h.gumbel.min_temperature = get<double>(cfg, "gumbel", "min_temperature");
  h.gumbel.hard = get<bool>(cfg, "gumbel", "hard");
  if (!(h.gumbel.temperature > 0.0) || !(h.gumbel.min_temperature > 0.0)) {
    throw ConfigError("gumbel temperatures must be positive");
  }
  if (g.c1 < 1 || g.c2 < 1 || f.c3 < 1) throw ConfigError("model widths must be positive");
  return m;
}

TrainConfig train_config(const Json& cfg) {
  TrainConfig t;
  if (get<std::string>(cfg, "optimizer", "name") != "adamw") throw ConfigError("optimizer.name: only adamw is supported");
  t.optimizer.lr = get<double>(cfg, "optimizer", "lr");
  t.optimizer.batch = get<int>(cfg, "optimizer", "batch");
  t.optimizer.weight_decay = get<double>(cfg, "optimizer", "weight_decay");
  t.optimizer.beta1 = get<double>(cfg, "optimizer", "beta1");
  t.optimizer.beta2 = get<double>(cfg, "optimizer", "beta2");
  t.optimizer.eps = get<double>(cfg, "optimizer", "eps");
  t.optimizer.grad_clip = get<double>(cfg, "optimizer", "grad_clip");
  t.stage1_steps = get<long>(cfg, "stages", "stage1_steps");
  t.stage2_steps = get<long>(cfg, "stages", "stage2_steps");
  t.seed = cfg.at("seed").get<std::uint64_t>();
  t.log_every = cfg.at("log_every").get<int>();
  if (t.optimizer.batch < 1) throw ConfigError("optimizer.batch must be >= 1");
  if (!(t.optimizer.lr > 0.0)) throw ConfigError("optimizer.lr must be positive");
  if (t.stage1_steps < 0 || t.stage2_steps < 0) throw ConfigError("stage step counts must be >= 0");
  return t;
}

std::string variant_tag(const Json& cfg) {
  std::string tag;
  if (!cfg.at("use_gat").get<bool>()) tag += "GCN";
  if (!cfg.at("use_caf").get<bool>()) tag += "-CAF";
  if (!cfg.at("use_ieg").get<bool>()) tag += "-IEG";
  if (cfg.at("ieg").at("zero_neighbor_context").get<bool>()) tag += "-ctx";
  const auto variant = cfg.at("fusion").at("variant").get<std::string>();
  if (variant != "d") tag += "(fusion " + variant + ")";
  return tag.empty() ? "full" : tag;
}

}  // namespace gvhoi
