#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvhoi/data_model.hpp"
#include "gvhoi/entity_graph.hpp"
#include "gvhoi/fusion.hpp"
#include "gvhoi/geometric_stream.hpp"
#include "gvhoi/temporal_head.hpp"
#include "gvhoi/visual_stream.hpp"

namespace gvhoi {

struct ModelConfig {
  GeometricConfig geometric;
  FusionConfig fusion;
  IegConfig ieg;
  HeadConfig head;
  int keypoints = 0;
  int visual_dim = 0;
  int human_slots = 0;
  int object_slots = 0;
  int n_sub_activities = 0;
  int n_affordances = 0;

  int entities() const { return human_slots + object_slots; }
};

// A video laid out on the model's fixed entity slots: humans first, then
// objects; unused slots are absent (presence 0) in every frame.
struct PreparedVideo {
  std::string video_id;
  int frames = 0;
  int human_slots = 0;
  int object_slots = 0;
  std::vector<std::string> slot_ids;      // entity_id per slot ("" for padding)
  GeometricFeatures geometry;             // entities = slots
  Tensor<float> visual;                   // [T, E, Dv]
  std::vector<std::uint8_t> presence;     // [T * E]
  std::vector<int> labels;                // [T * E], -1 where unlabeled or absent

  int entities() const { return human_slots + object_slots; }
  EntityKind kind(int slot) const { return slot < human_slots ? EntityKind::human : EntityKind::object; }
  std::vector<int> slot_labels(int slot) const;
  std::vector<std::uint8_t> slot_label_mask(int slot) const;
};

// Objects beyond object_slots are dropped in sequence order (object-count cap);
// more humans than human_slots is a DataError.
PreparedVideo prepare_video(const EntitySequence& seq, int human_slots, int object_slots,
                            const NormalizationSpec& norm);

template <class S>
struct Model {
  ModelConfig cfg;
  ParamSet<S> params;
  GeometricStreamParams<S> geometric;
  VisualStreamParams<S> visual;
  FusionParams<S> fusion;
  IegParams<S> ieg;
  HeadParams<S> head;

  static Model make(const ModelConfig& cfg, std::uint64_t seed);
};

struct ForwardOptions {
  bool uniform_boundary = false;  // training stage 1: boundary input fixed at 0.5
  double tau = 1.0;
  bool sample_noise = false;      // Gumbel noise on (training) or zero noise (evaluation)
  CounterRng noise_rng;           // noise source, already keyed by step and video
};

template <class S>
struct ForwardResult {
  HeadOutput<S> head;
  std::vector<std::uint8_t> boundary_decisions;  // [T * E]
  Tensor<S> fusion_attention;
  Tensor<S> neighbor_attn;
};

template <class S>
ForwardResult<S> forward(const Model<S>& model, const PreparedVideo& video, const ForwardOptions& opt);

// Per-slot frame-wise argmax predictions [T * E]; -1 for absent slots or
// kinds without a classifier.
template <class S>
std::vector<int> frame_predictions(const ForwardResult<S>& fr, const PreparedVideo& video);

}  // namespace gvhoi
