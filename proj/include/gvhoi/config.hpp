#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "gvhoi/model.hpp"

namespace gvhoi {

using Json = nlohmann::json;

// Every recognised key with its default. Overrides may only touch keys that
// exist here, with a value of the same JSON type.
Json default_config();

// Applies "a.b.c" = value. The value text is parsed as JSON when possible
// (numbers, booleans, arrays) and taken as a string otherwise.
void apply_override(Json& cfg, const std::string& dotted_key, const std::string& value);

// Recursively applies every leaf of `patch` with the same type checks.
void merge_config(Json& cfg, const Json& patch);

// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const Json& cfg);

// Dataset-dependent sizes the model is built for.
struct DataShape {
  int keypoints = 0;
  int visual_dim = 0;
  int human_slots = 0;
  int object_slots = 0;
  int n_sub_activities = 0;
  int n_affordances = 0;
};

ModelConfig model_config(const Json& cfg, const DataShape& shape);

struct OptimizerConfig {
  double lr = 1e-4;
  int batch = 16;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0.0;  // global norm; 0 disables
};

struct TrainConfig {
  OptimizerConfig optimizer;
  long stage1_steps = 1000;
  long stage2_steps = 1000;
  std::uint64_t seed = 0;
  int log_every = 50;
};

TrainConfig train_config(const Json& cfg);

// Short tag naming the active ablation switches, e.g. "full" or "-IEG".
std::string variant_tag(const Json& cfg);

}  // namespace gvhoi
