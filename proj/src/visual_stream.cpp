#include "gvhoi/visual_stream.hpp"

namespace gvhoi {

template <class S>
VisualEmbedding<S> project_visual(const Tensor<S>& visual, const std::vector<std::uint8_t>& mask,
                                  const VisualStreamParams<S>& params) {
  if (visual.rank() != 3) throw ShapeError("project_visual: expected [T, E, Dv], got " + shape_str(visual.shape));
  if (visual.dim(2) != params.visual_dim()) {
    throw ShapeError("project_visual: visual width " + std::to_string(visual.dim(2)) + " does not match configured Dv " +
                     std::to_string(params.visual_dim()));
  }
  if (mask.size() != static_cast<std::size_t>(visual.dim(0)) * visual.dim(1)) {
    throw ShapeError("project_visual: mask size");
  }
  // Zero masked inputs too, so a masked entity's values cannot leak through biases.
  Var<S> x = ag::mask_rows(Var<S>(visual), row_weights<S>(mask));
  return {ag::mask_rows(params.project(x), row_weights<S>(mask)), mask};
}

template VisualEmbedding<float> project_visual<float>(const Tensor<float>&, const std::vector<std::uint8_t>&,
                                                      const VisualStreamParams<float>&);
template VisualEmbedding<double> project_visual<double>(const Tensor<double>&, const std::vector<std::uint8_t>&,
                                                        const VisualStreamParams<double>&);

}  // namespace gvhoi
