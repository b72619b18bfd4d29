#include "gvhoi/entity_graph.hpp"

#include <ostream>

namespace gvhoi {

namespace {

int neighbor_entity(int target, int j) { return j < target ? j : j + 1; }

}  // namespace

template <class S>
Var<S> neighbor_feature(const Var<S>& x, const IegParams<S>& params, const IegConfig& cfg, int entities) {
  if (entities < 2) throw ShapeError("neighbor_feature: needs at least 2 entities");
  const S lambda = static_cast<S>(cfg.lambda);
  const S ctx_scale = (S(1) - lambda) / static_cast<S>(entities - 1);
  Var<S> wx = params.w3(x);
  if (cfg.context == NeighborContext::channel_gap) {
    const int c = x.value().cols();
    wx = ag::expand_cols(ag::row_mean(wx), c);
  }
  return ag::add_scaled(x, lambda, wx, ctx_scale);
}

template <class S>
Tensor<S> aggregate_neighbors(const Tensor<S>& s, const std::vector<std::uint8_t>& valid, int target) {
  if (s.rank() != 2) throw ShapeError("aggregate_neighbors: expected [E, C]");
  const int e = s.dim(0);
  const int c = s.dim(1);
  if (valid.size() != static_cast<std::size_t>(e) || target < 0 || target >= e) {
    throw ShapeError("aggregate_neighbors: mask size or target out of range");
  }
  Tensor<S> out(Shape{e - 1, c});
  for (int j = 0; j < e - 1; ++j) {
    const int u = neighbor_entity(target, j);
    if (!valid[static_cast<std::size_t>(u)]) continue;
    for (int k = 0; k < c; ++k) out[static_cast<std::size_t>(j) * c + k] = s[static_cast<std::size_t>(u) * c + k];
  }
  return out;
}

template <class S>
std::vector<S> neighbor_attention(const Tensor<S>& s, const std::vector<std::uint8_t>& valid, int target,
                                  kernels::NeighborQuery query) {
  if (s.rank() != 2) throw ShapeError("neighbor_attention: expected [E, C]");
  const int e = s.dim(0);
  const int c = s.dim(1);
  if (valid.size() != static_cast<std::size_t>(e) || target < 0 || target >= e || e < 2) {
    throw ShapeError("neighbor_attention: mask size, entity count or target out of range");
  }
  // The kernel skips invalid targets; score this one regardless of its own flag.
  std::vector<std::uint8_t> mask = valid;
  mask[static_cast<std::size_t>(target)] = 1;
  std::vector<S> ctx(static_cast<std::size_t>(e) * c);
  std::vector<S> weight(static_cast<std::size_t>(e) * (e - 1));
  std::vector<S> probs(static_cast<std::size_t>(e) * (e - 1) * (e - 1));
  kernels::neighbor_forward(kernels::NeighborShape{1, e, c}, query, s.ptr(), mask.data(), ctx.data(), weight.data(),
                            probs.data());
  return std::vector<S>(weight.begin() + static_cast<std::ptrdiff_t>(target) * (e - 1),
                        weight.begin() + static_cast<std::ptrdiff_t>(target + 1) * (e - 1));
}

template <class S>
RefinedEntityFeatures<S> refine(const FusedEntityFeatures<S>& fused, const IegParams<S>& params,
                                const IegConfig& cfg) {
  const auto& shape = fused.values.shape();
  if (shape.size() != 3) throw ShapeError("refine: expected [T, E, C3], got " + shape_str(shape));
  const int frames = shape[0];
  const int entities = shape[1];
  RefinedEntityFeatures<S> out;
  out.entity_mask = fused.entity_mask;
  if (!cfg.enabled || entities < 2 || cfg.zero_neighbor_context) {
    // S^u = 0 makes every neighbor context zero, so refinement is the identity.
    out.values = fused.values;
    if (cfg.enabled && entities >= 2) {
      out.neighbor_attn = Tensor<S>(Shape{frames, entities, entities - 1});
    }
    return out;
  }
  Var<S> s = neighbor_feature(fused.values, params, cfg, entities);
  Var<S> ctx = ag::neighbor_context(s, fused.entity_mask, cfg.query, &out.neighbor_attn);
  out.values = ag::mask_rows(ag::add(fused.values, ctx), row_weights<S>(fused.entity_mask));
  return out;
}

template <class S>
void write_neighbor_attn_csv(std::ostream& os, const Tensor<S>& neighbor_attn,
                             const std::vector<std::uint8_t>& entity_mask) {
  os << "frame,entity,neighbor,weight\n";
  if (neighbor_attn.numel() == 0) return;
  const int frames = neighbor_attn.dim(0);
  const int entities = neighbor_attn.dim(1);
  for (int t = 0; t < frames; ++t) {
    for (int e = 0; e < entities; ++e) {
      if (!entity_mask[static_cast<std::size_t>(t) * entities + e]) continue;
      for (int j = 0; j < entities - 1; ++j) {
        const int u = neighbor_entity(e, j);
        if (!entity_mask[static_cast<std::size_t>(t) * entities + u]) continue;
        os << t << ',' << e << ',' << u << ','
           << neighbor_attn[(static_cast<std::size_t>(t) * entities + e) * (entities - 1) + j] << '\n';
      }
    }
  }
}

#define GVHOI_INSTANTIATE_IEG(S)                                                                                  \
  template Var<S> neighbor_feature<S>(const Var<S>&, const IegParams<S>&, const IegConfig&, int);                \
  template Tensor<S> aggregate_neighbors<S>(const Tensor<S>&, const std::vector<std::uint8_t>&, int);            \
  template std::vector<S> neighbor_attention<S>(const Tensor<S>&, const std::vector<std::uint8_t>&, int,         \
                                                kernels::NeighborQuery);                                         \
  template RefinedEntityFeatures<S> refine<S>(const FusedEntityFeatures<S>&, const IegParams<S>&,                \
                                              const IegConfig&);                                                 \
  template void write_neighbor_attn_csv<S>(std::ostream&, const Tensor<S>&, const std::vector<std::uint8_t>&);

GVHOI_INSTANTIATE_IEG(float)
GVHOI_INSTANTIATE_IEG(double)

}  // namespace gvhoi
