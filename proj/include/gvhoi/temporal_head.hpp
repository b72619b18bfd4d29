#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvhoi/data_model.hpp"
#include "gvhoi/entity_graph.hpp"

namespace gvhoi {

struct GumbelConfig {
  double temperature = 1.0;
  double anneal_rate = 1e-4;
  double min_temperature = 0.1;
  bool hard = true;
};

// tau_step = max(min_temperature, temperature * exp(-anneal_rate * step)).
double temperature_at(const GumbelConfig& cfg, long step);

enum class BoundaryMode : std::uint8_t { concat, none };

struct HeadConfig {
  int hidden = 0;  // per direction; 0 means C3 / 2
  BoundaryMode boundary_mode = BoundaryMode::concat;
  GumbelConfig gumbel;
};

template <class S>
struct GruParams {
  Linear<S> ih;  // I -> 3H, gate order (reset, update, new)
  Var<S> w_hh;   // [3H, H]
  Var<S> b_hh;   // [3H]

  static GruParams make(ParamSet<S>& ps, const CounterRng& rng, const std::string& name, int in, int hidden);
  int hidden() const { return w_hh.value().dim(1); }
};

template <class S>
struct HeadParams {
  Linear<S> boundary;  // C3 -> 2 logits (class 1 = boundary)
  GruParams<S> gru_fwd;
  GruParams<S> gru_bwd;
  Linear<S> classifier_human;   // 2H -> n_sub_activities
  Linear<S> classifier_object;  // 2H -> n_affordances; absent when n_affordances == 0

  static HeadParams make(ParamSet<S>& ps, const CounterRng& rng, const HeadConfig& cfg, int c3, int n_sub,
                         int n_affordances);
  bool has_object_classifier() const { return classifier_object.w.defined(); }
};

// Standard Gumbel(0, 1) draws for a [rows, cols] logit block.
template <class S>
Tensor<S> gumbel_noise(const CounterRng& rng, int rows, int cols);

template <class S>
Var<S> gumbel_softmax(const Var<S>& logits, const Tensor<S>& noise, const GumbelConfig& cfg, double tau);

template <class S>
struct BoundaryOutput {
  Var<S> probability;                   // [T, E, 1] boundary indicator fed to the recurrence
  std::vector<std::uint8_t> decisions;  // [T * E] argmax == boundary; frame 0 always 1
};

// noise empty = zero noise (evaluation).
template <class S>
BoundaryOutput<S> boundary_sample(const Var<S>& refined, const HeadParams<S>& params, const GumbelConfig& cfg,
                                  double tau, const Tensor<S>& noise);

// Boundary input held at the soft uniform value 0.5 (training stage 1).
template <class S>
BoundaryOutput<S> uniform_boundary(int frames, int entities);

template <class S>
struct HeadOutput {
  Var<S> human_logits;   // [rows, n_sub]
  Var<S> object_logits;  // [rows, n_aff]; undefined when no object classifier or no object slots
  std::vector<int> human_rows;   // frame * E + entity for each logits row
  std::vector<int> object_rows;
};

// Bidirectional recurrence over time per entity slot; slots [0, human_slots)
// are humans, the rest objects. boundary may be undefined (boundary_mode none).
template <class S>
HeadOutput<S> bigru_classify(const Var<S>& refined, const Var<S>& boundary, const HeadParams<S>& params,
                             int human_slots);

template <class S>
struct LossBreakdown {
  Var<S> total;  // mean CE over all valid (frame, entity) pairs
  double human = 0.0;  // mean CE over valid human pairs (0 if none)
  double object = 0.0;
  int human_count = 0;
  int object_count = 0;
};

// labels [T * E], -1 for masked pairs. Throws DataError when nothing is labelled.
template <class S>
LossBreakdown<S> head_loss(const HeadOutput<S>& out, const std::vector<int>& labels);

// Row-wise argmax of a [rows, n] tensor, lowest index on ties.
template <class S>
std::vector<int> argmax_rows(const Tensor<S>& logits);

// Labels each ground-truth segment by majority vote of frame-wise argmax.
// frame_pred[t] is the predicted class at frame t. Ties go to the lowest class.
SegmentTimeline predict_known_segments(const std::vector<int>& frame_pred, const SegmentTimeline& gt_segments);

}  // namespace gvhoi
