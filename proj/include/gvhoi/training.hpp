#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gvhoi/config.hpp"
#include "gvhoi/dataset_io.hpp"
#include "gvhoi/metrics.hpp"
#include "gvhoi/model.hpp"
#include "gvhoi/synth.hpp"

namespace gvhoi {

// A dataset held in memory together with its fold plan.
struct DataBundle {
  io::DatasetManifest manifest;  // root is empty for generated data
  std::vector<EntitySequence> videos;
  std::vector<io::Fold> folds;

  const EntitySequence& video(const std::string& id) const;
};

// Generates the configured synthetic preset or loads dataset.source from disk,
// applies dataset.subsample, and builds folds for dataset.protocol.
DataBundle load_data(const Json& cfg);

// Manifest and videos of a generated benchmark (folds left empty).
DataBundle bundle_from_synthetic(const synth::Benchmark& bench);

// (train ids, test ids) for dataset.fold, or every video for both when
// dataset.train_on is "all".
std::pair<std::vector<std::string>, std::vector<std::string>> select_split(const DataBundle& data, const Json& cfg);

DataShape data_shape(const DataBundle& data, const Json& cfg);

std::vector<PreparedVideo> prepare_videos(const DataBundle& data, const std::vector<std::string>& ids,
                                          const DataShape& shape);

class AdamW {
 public:
  AdamW(const OptimizerConfig& cfg, std::vector<Var<float>> params);
  // One update from the gradients currently stored on the parameters.
  void step();

 private:
  OptimizerConfig cfg_;
  std::vector<Var<float>> params_;
  std::vector<Tensor<float>> m_;
  std::vector<Tensor<float>> v_;
  long t_ = 0;
};

// Parameter groups frozen during stage 1 (boundary module and recurrence).
bool trainable_in_stage(const std::string& param_name, int stage);

struct StepLog {
  long step = 0;  // global, 1-based
  int stage = 1;
  double loss = 0.0;
  double human_loss = 0.0;
  double object_loss = 0.0;
  double tau = 1.0;
};

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  // Called every validate_every steps and after each stage.
  std::function<void(long step, int stage)> on_validate;
  long validate_every = 0;
};

struct TrainResult {
  std::vector<StepLog> log;
  long steps = 0;
  double final_tau = 1.0;
};

// Two-stage AdamW training with per-video gradient accumulation over batches.
// Throws CheckError on a non-finite loss, naming the step and parameter norms.
TrainResult train(Model<float>& model, const std::vector<PreparedVideo>& videos, const TrainConfig& tc,
                  const TrainHooks& hooks = {});

// Noise stream of one video at one step.
CounterRng gumbel_stream(std::uint64_t seed, long step, const std::string& video_id);

struct VideoPrediction {
  std::string video_id;
  std::vector<int> frame_pred;  // [T * E]
  std::vector<std::uint8_t> boundaries;
  Tensor<float> neighbor_attn;
};

// Evaluation-mode forward (zero noise) over the given videos.
std::vector<VideoPrediction> predict(const Model<float>& model, const std::vector<PreparedVideo>& videos, double tau);

// Per-slot timelines of labelled entities, for scoring.
std::vector<EntityTimelines> entity_timelines(const std::vector<PreparedVideo>& videos,
                                              const std::vector<VideoPrediction>& preds);

// Checkpoint container: magic "GVCKPT01", u32 version, then length-prefixed
// config hash, config JSON and metadata JSON, then named f32 tensors.
struct Checkpoint {
  std::string config_hash;
  Json config;
  Json meta;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

Checkpoint make_checkpoint(const Model<float>& model, const Json& cfg, const DataShape& shape, const Json& meta);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
DataShape checkpoint_shape(const Checkpoint& ckpt);
// Builds the model described by the checkpoint and copies its tensors in.
Model<float> restore_model(const Checkpoint& ckpt);

}  // namespace gvhoi
