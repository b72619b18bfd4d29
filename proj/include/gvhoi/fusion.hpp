#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvhoi/geometric_stream.hpp"
#include "gvhoi/visual_stream.hpp"

namespace gvhoi {

// Fusion designs:
//   a  humans and objects separately, geometry|visual joined on the feature channel
//   b  humans and objects separately, joined on the entity axis
//   c  visual and geometric streams separately, each on the entity axis
//   d  all geometry and visual entities on the entity axis, one attention
enum class FusionVariant : std::uint8_t { a, b, c, d };
// Global average pooling axis for the attention descriptor.
enum class FusionPooling : std::uint8_t { time, time_entity };

FusionVariant fusion_variant_from_string(const std::string& s);
std::string to_string(FusionVariant v);

struct FusionConfig {
  FusionVariant variant = FusionVariant::d;
  FusionPooling pooling = FusionPooling::time;
  bool use_caf = true;  // false: plain concatenation + merge (ablation)
  int c3 = 512;
  int reduction = 16;
  int min_reduced = 4;
};

// Which [T, 2E, C2] slots share one attention descriptor. Slot index is
// 2*entity + stream (stream 0 geometry, 1 visual).
struct AttentionGroup {
  std::string name;
  std::vector<std::vector<int>> blocks;  // each block pools into one C2-wide descriptor chunk
};

struct FusionLayout {
  std::vector<AttentionGroup> groups;
  std::vector<int> slot_block;  // global block index per slot
  int total_blocks = 0;
};

inline int fusion_slot(int entity, int stream) { return 2 * entity + stream; }

FusionLayout make_fusion_layout(FusionVariant variant, FusionPooling pooling, int human_slots, int object_slots);

// Reduced width of the squeeze layer: ceil(channels / reduction), at least min_reduced.
int reduced_width(int channels, int reduction, int min_reduced);

template <class S>
struct ChannelAttentionParams {
  Linear<S> squeeze;  // channels -> r
  Linear<S> excite;   // r -> channels
};

template <class S>
struct FusionParams {
  FusionLayout layout;
  std::vector<ChannelAttentionParams<S>> attention;  // one per layout group
  Linear<S> merge;                                   // 2*C2 -> C3

  static FusionParams make(ParamSet<S>& ps, const CounterRng& rng, const FusionConfig& cfg, int human_slots,
                           int object_slots, int c2);
};

template <class S>
struct FusedEntityFeatures {
  Var<S> values;                          // [T, E, C3]
  std::vector<std::uint8_t> entity_mask;  // [T * E]
  Tensor<S> attention;                    // [1, total_blocks * C2], empty without CAF
};

// A = sigmoid(W2 relu(W1 d)) for a pooled descriptor d of shape [1, channels].
template <class S>
Var<S> channel_attention(const Var<S>& descriptor, const ChannelAttentionParams<S>& params);

// Temporal global average pooling of a [T, C] stream: per-channel mean over T.
template <class S>
Var<S> gap_time(const Var<S>& x);

template <class S>
FusedEntityFeatures<S> fuse(const GeometricEmbedding<S>& ge, const VisualEmbedding<S>& ve,
                            const std::vector<std::uint8_t>& presence, const FusionParams<S>& params,
                            const FusionConfig& cfg);

}  // namespace gvhoi
