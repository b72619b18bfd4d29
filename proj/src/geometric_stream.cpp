#include "gvhoi/geometric_stream.hpp"

namespace gvhoi {

template <class S>
GeometricStreamParams<S> GeometricStreamParams<S>::make(ParamSet<S>& ps, const CounterRng& rng,
                                                        const GeometricConfig& cfg, int keypoints) {
  if (cfg.heads < 1 || cfg.c1 % cfg.heads != 0) throw ConfigError("geometric.c1 must be divisible by geometric.heads");
  GeometricStreamParams p;
  p.gat.theta = ps.add("gat.theta", uniform_init<S>(Shape{cfg.c1, 4}, xavier_bound(4, cfg.c1), rng.fork("gat.theta")));
  if (cfg.use_gat) {
    p.gat.attn = ps.add("gat.attn", uniform_init<S>(Shape{2 * cfg.c1}, xavier_bound(2 * cfg.c1, 1), rng.fork("gat.attn")));
  }
  p.gat.leaky_slope = cfg.leaky_slope;
  if (cfg.temporal == TemporalMode::channel) {
    p.mix = Linear<S>::make(ps, rng, "temporal_mix", cfg.c1, cfg.c1);
  } else {
    p.mix_taps = ps.add("temporal_mix.taps", uniform_init<S>(Shape{3, cfg.c1}, xavier_bound(3, 1), rng.fork("temporal_mix.taps")));
    p.mix_bias = ps.add("temporal_mix.b", Tensor<S>(Shape{cfg.c1}));
  }
  p.project = Mlp2<S>::make(ps, rng, "geo_mlp", keypoints * cfg.c1, cfg.c2, cfg.c2);
  return p;
}

template <class S>
Tensor<S> gat_attention(const Tensor<S>& features, const std::vector<std::uint8_t>& mask, const Tensor<S>& attn,
                        double leaky_slope, kernels::GatScoring scoring) {
  if (features.rank() != 2) throw ShapeError("gat_attention: features must be [N, C]");
  const int n = features.dim(0);
  const int c = features.dim(1);
  if (mask.size() != static_cast<std::size_t>(n)) throw ShapeError("gat_attention: mask size");
  if (attn.numel() != 2 * static_cast<std::size_t>(c)) throw ShapeError("gat_attention: attention vector size");
  bool any = false;
  for (auto m : mask) any = any || m;
  if (!any) throw ShapeError("no valid keypoints");
  Tensor<S> out(Shape{n, c});
  Tensor<S> alpha(Shape{n, n});
  kernels::GatOptions opt;
  opt.scoring = scoring;
  opt.leaky_slope = leaky_slope;
  kernels::gat_forward(kernels::GatShape{1, n, c, 1}, opt, features.ptr(), mask.data(), attn.ptr(), out.ptr(),
                       alpha.ptr());
  return alpha;
}

template <class S>
Var<S> geometry_input(const GeometricFeatures& geo) {
  Tensor<S> t(Shape{geo.frames, geo.entities * geo.keypoints, 4});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<S>(geo.values[i]);
  return Var<S>(std::move(t));
}

template <class S>
Var<S> gat_layer(const Var<S>& geo, const std::vector<std::uint8_t>& mask, const GatParams<S>& params,
                 const GeometricConfig& cfg, Tensor<S>* alpha_out) {
  kernels::GatOptions opt;
  opt.scoring = cfg.scoring;
  opt.include_self_in_sum = cfg.include_self_in_sum;
  opt.leaky_slope = params.leaky_slope;
  Var<S> h = ag::linear(geo, params.theta, Var<S>());
  return ag::graph_attention(h, mask, params.attn, cfg.heads, opt, alpha_out);
}

template <class S>
Var<S> gcn_layer_variant(const Var<S>& geo, const std::vector<std::uint8_t>& mask, const GatParams<S>& params) {
  kernels::GatOptions opt;
  opt.scoring = kernels::GatScoring::uniform;
  Var<S> h = ag::linear(geo, params.theta, Var<S>());
  return ag::graph_attention(h, mask, Var<S>(), 1, opt);
}

template <class S>
Var<S> temporal_mix(const Var<S>& gs, const GeometricStreamParams<S>& params, TemporalMode mode) {
  if (mode == TemporalMode::channel) return params.mix(gs);
  return ag::temporal_depthwise3(gs, params.mix_taps, params.mix_bias);
}

template <class S>
GeometricEmbedding<S> entity_project(const Var<S>& gst, int entities, int keypoints,
                                     const std::vector<std::uint8_t>& keypoint_mask, const Mlp2<S>& mlp) {
  if (gst.value().rank() != 3 || gst.value().dim(1) != entities * keypoints) {
    throw ShapeError("entity_project: expected [T, E*K, C1] with E*K = " + std::to_string(entities * keypoints) +
                     ", got " + shape_str(gst.shape()));
  }
  const int frames = gst.value().dim(0);
  const int c1 = gst.value().dim(2);
  if (keypoint_mask.size() != static_cast<std::size_t>(frames) * entities * keypoints) {
    throw ShapeError("entity_project: keypoint mask size");
  }
  GeometricEmbedding<S> out;
  out.entity_mask.assign(static_cast<std::size_t>(frames) * entities, 0);
  for (std::size_t i = 0; i < keypoint_mask.size(); ++i) {
    if (keypoint_mask[i]) out.entity_mask[i / static_cast<std::size_t>(keypoints)] = 1;
  }
  Var<S> masked = ag::mask_rows(gst, row_weights<S>(keypoint_mask));
  Var<S> flat = ag::reshape(masked, Shape{frames, entities, keypoints * c1});
  out.values = ag::mask_rows(mlp(flat), row_weights<S>(out.entity_mask));
  return out;
}

template <class S>
GeometricEmbedding<S> geometric_stream(const GeometricFeatures& geo, const GeometricStreamParams<S>& params,
                                       const GeometricConfig& cfg, Tensor<S>* alpha_out) {
  Var<S> x = geometry_input<S>(geo);
  Var<S> gs = cfg.use_gat ? gat_layer(x, geo.mask, params.gat, cfg, alpha_out)
                          : gcn_layer_variant(x, geo.mask, params.gat);
  Var<S> gst = temporal_mix(gs, params, cfg.temporal);
  return entity_project(gst, geo.entities, geo.keypoints, geo.mask, params.project);
}

#define GVHOI_INSTANTIATE_GEO(S)                                                                               \
  template struct GeometricStreamParams<S>;                                                                   \
  template Tensor<S> gat_attention<S>(const Tensor<S>&, const std::vector<std::uint8_t>&, const Tensor<S>&,   \
                                      double, kernels::GatScoring);                                           \
  template Var<S> geometry_input<S>(const GeometricFeatures&);                                                \
  template Var<S> gat_layer<S>(const Var<S>&, const std::vector<std::uint8_t>&, const GatParams<S>&,          \
                               const GeometricConfig&, Tensor<S>*);                                           \
  template Var<S> gcn_layer_variant<S>(const Var<S>&, const std::vector<std::uint8_t>&, const GatParams<S>&); \
  template Var<S> temporal_mix<S>(const Var<S>&, const GeometricStreamParams<S>&, TemporalMode);              \
  template GeometricEmbedding<S> entity_project<S>(const Var<S>&, int, int, const std::vector<std::uint8_t>&,  \
                                                   const Mlp2<S>&);                                           \
  template GeometricEmbedding<S> geometric_stream<S>(const GeometricFeatures&, const GeometricStreamParams<S>&, \
                                                     const GeometricConfig&, Tensor<S>*);

GVHOI_INSTANTIATE_GEO(float)
GVHOI_INSTANTIATE_GEO(double)

}  // namespace gvhoi
