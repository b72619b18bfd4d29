#pragma once

#include <cstdint>
#include <vector>

#include "gvhoi/data_model.hpp"
#include "gvhoi/kernels/kernels.hpp"
#include "gvhoi/nn.hpp"

namespace gvhoi {

enum class TemporalMode : std::uint8_t { channel, depthwise3 };

struct GeometricConfig {
  int c1 = 128;
  int c2 = 256;
  int heads = 1;
  bool use_gat = true;  // false: mean-aggregation GCN (ablation)
  bool include_self_in_sum = false;
  kernels::GatScoring scoring = kernels::GatScoring::v1;
  double leaky_slope = 0.2;
  TemporalMode temporal = TemporalMode::channel;
};

template <class S>
struct GatParams {
  Var<S> theta;  // [C1, 4], no bias
  Var<S> attn;   // [2 * C1]
  double leaky_slope = 0.2;
};

template <class S>
struct GeometricStreamParams {
  GatParams<S> gat;
  Linear<S> mix;          // channel mode: [C1, C1]
  Var<S> mix_taps;        // depthwise3 mode: [3, C1]
  Var<S> mix_bias;        // depthwise3 mode: [C1]
  Mlp2<S> project;        // K*C1 -> C2 -> C2

  static GeometricStreamParams make(ParamSet<S>& ps, const CounterRng& rng, const GeometricConfig& cfg,
                                    int keypoints);
};

// Per-entity embedding after the geometric stream.
template <class S>
struct GeometricEmbedding {
  Var<S> values;                          // [T, E, C2]
  std::vector<std::uint8_t> entity_mask;  // [T * E]: entity has >= 1 valid keypoint
};

// Attention matrix of one frame. features is [N, C1] (already projected by
// theta); rows and columns of masked keypoints are 0. Throws ShapeError with
// "no valid keypoints" when every keypoint is masked.
template <class S>
Tensor<S> gat_attention(const Tensor<S>& features, const std::vector<std::uint8_t>& mask, const Tensor<S>& attn,
                        double leaky_slope, kernels::GatScoring scoring = kernels::GatScoring::v1);

// Keypoint-level features of the whole video as a [T, E*K, 4] tensor.
template <class S>
Var<S> geometry_input(const GeometricFeatures& geo);

// g^s: graph attention over all valid keypoints of all entities in a frame.
// Output [T, E*K, C1]. Frames with no valid keypoint yield zeros.
template <class S>
Var<S> gat_layer(const Var<S>& geo, const std::vector<std::uint8_t>& mask, const GatParams<S>& params,
                 const GeometricConfig& cfg, Tensor<S>* alpha_out = nullptr);

// Uniform 1/|valid| aggregation over the same masked graph (GCN ablation).
template <class S>
Var<S> gcn_layer_variant(const Var<S>& geo, const std::vector<std::uint8_t>& mask, const GatParams<S>& params);

// Kernel-size-1 channel mixing shared across frames (or the depthwise width-3
// temporal alternative). Output shape equals input shape.
template <class S>
Var<S> temporal_mix(const Var<S>& gs, const GeometricStreamParams<S>& params, TemporalMode mode);

// [T, E*K, C1] -> [T, E, K*C1] -> MLP -> [T, E, C2]; entities without a valid
// keypoint in a frame output zeros. Masked keypoint slots are zeroed first.
template <class S>
GeometricEmbedding<S> entity_project(const Var<S>& gst, int entities, int keypoints,
                                     const std::vector<std::uint8_t>& keypoint_mask, const Mlp2<S>& mlp);

// Whole stream: GAT (or GCN) -> temporal mix -> entity MLP.
template <class S>
GeometricEmbedding<S> geometric_stream(const GeometricFeatures& geo, const GeometricStreamParams<S>& params,
                                       const GeometricConfig& cfg, Tensor<S>* alpha_out = nullptr);

}  // namespace gvhoi
