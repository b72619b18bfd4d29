#pragma once

#include <cstdint>
#include <vector>

#include "gvhoi/nn.hpp"

namespace gvhoi {

template <class S>
struct VisualEmbedding {
  Var<S> values;                          // [T, E, C2]
  std::vector<std::uint8_t> entity_mask;  // [T * E]
};

template <class S>
struct VisualStreamParams {
  Mlp2<S> project;  // Dv -> C2 -> C2

  static VisualStreamParams make(ParamSet<S>& ps, const CounterRng& rng, int visual_dim, int c2) {
    return {Mlp2<S>::make(ps, rng, "vis_mlp", visual_dim, c2, c2)};
  }
  int visual_dim() const { return project.fc1.in(); }
};

// Projects precomputed visual features [T, E, Dv] per entity and frame;
// entities whose mask is false output zeros. Throws ShapeError on a Dv
// mismatch with the parameters.
template <class S>
VisualEmbedding<S> project_visual(const Tensor<S>& visual, const std::vector<std::uint8_t>& mask,
                                  const VisualStreamParams<S>& params);

}  // namespace gvhoi
