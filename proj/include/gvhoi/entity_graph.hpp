#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gvhoi/fusion.hpp"

namespace gvhoi {

// How the neighbor's transformed feature enters S^u: pooled over channels to
// a scalar and broadcast back, or passed per channel.
enum class NeighborContext : std::uint8_t { channel_gap, channel };

struct IegConfig {
  bool enabled = true;
  double lambda = 0.5;
  // Drops the neighbor contextual term entirely (S^u = 0), for datasets with
  // a single interacting pair.
  bool zero_neighbor_context = false;
  NeighborContext context = NeighborContext::channel_gap;
  kernels::NeighborQuery query = kernels::NeighborQuery::neighbor;
};

template <class S>
struct IegParams {
  Linear<S> w3;  // C3 -> C3, no bias

  static IegParams make(ParamSet<S>& ps, const CounterRng& rng, int c3) {
    return {Linear<S>::make(ps, rng, "ieg.w3", c3, c3, false)};
  }
};

template <class S>
struct RefinedEntityFeatures {
  Var<S> values;                          // [T, E, C3]
  std::vector<std::uint8_t> entity_mask;  // [T * E]
  Tensor<S> neighbor_attn;                // [T, E, E-1]; empty when the graph is bypassed
};

// S^u = lambda * x + (1 - lambda) * ctx(W3 x) / (E - 1) over the last axis of x.
// Throws ShapeError for entities < 2.
template <class S>
Var<S> neighbor_feature(const Var<S>& x, const IegParams<S>& params, const IegConfig& cfg, int entities);

// The (E-1) x C stack of neighbor rows for `target`, canonical order with the
// target removed; invalid neighbors give zero rows. s is [E, C].
template <class S>
Tensor<S> aggregate_neighbors(const Tensor<S>& s, const std::vector<std::uint8_t>& valid, int target);

// Attention weights W over the (E-1) neighbors of `target` for one frame.
// s is [E, C]. All-ones when no neighbor is valid.
template <class S>
std::vector<S> neighbor_attention(const Tensor<S>& s, const std::vector<std::uint8_t>& valid, int target,
                                  kernels::NeighborQuery query = kernels::NeighborQuery::neighbor);

// refined = fused + mean over valid neighbors of W_j * S_j, masked by presence.
// Passes fused through unchanged when disabled or E < 2.
template <class S>
RefinedEntityFeatures<S> refine(const FusedEntityFeatures<S>& fused, const IegParams<S>& params,
                                const IegConfig& cfg);

// CSV rows "frame,entity,neighbor,weight" for valid (frame, entity, neighbor)
// triples; neighbor is the neighbor's entity index.
template <class S>
void write_neighbor_attn_csv(std::ostream& os, const Tensor<S>& neighbor_attn,
                             const std::vector<std::uint8_t>& entity_mask);

}  // namespace gvhoi
