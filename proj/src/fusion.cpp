#include "gvhoi/fusion.hpp"

namespace gvhoi {

FusionVariant fusion_variant_from_string(const std::string& s) {
  if (s == "a") return FusionVariant::a;
  if (s == "b") return FusionVariant::b;
  if (s == "c") return FusionVariant::c;
  if (s == "d") return FusionVariant::d;
  throw ConfigError("unknown fusion variant '" + s + "' (expected a, b, c or d)");
}

std::string to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::a: return "a";
    case FusionVariant::b: return "b";
    case FusionVariant::c: return "c";
    case FusionVariant::d: return "d";
  }
  return "?";
}

int reduced_width(int channels, int reduction, int min_reduced) {
  return std::max(min_reduced, (channels + reduction - 1) / reduction);
}

namespace {

// Blocks for a group of entities on given streams. Entity-axis grouping keeps
// one block per (stream, entity) slot, ordered stream-major; pooled grouping
// collapses each stream's entities into one block.
void add_entity_blocks(AttentionGroup& g, const std::vector<int>& entities, const std::vector<int>& streams,
                       bool pool_entities) {
  for (int s : streams) {
    if (pool_entities) {
      std::vector<int> blk;
      for (int e : entities) blk.push_back(fusion_slot(e, s));
      g.blocks.push_back(std::move(blk));
    } else {
      for (int e : entities) g.blocks.push_back({fusion_slot(e, s)});
    }
  }
}

std::vector<int> iota_range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i < hi; ++i) v.push_back(i);
  return v;
}

}  // namespace

FusionLayout make_fusion_layout(FusionVariant variant, FusionPooling pooling, int human_slots, int object_slots) {
  const int entities = human_slots + object_slots;
  const bool pooled = pooling == FusionPooling::time_entity;
  const auto humans = iota_range(0, human_slots);
  const auto objects = iota_range(human_slots, entities);
  const auto all = iota_range(0, entities);

  FusionLayout layout;
  auto push = [&](std::string name, const std::vector<int>& ents, const std::vector<int>& streams, bool pool) {
    if (ents.empty()) return;
    AttentionGroup g;
    g.name = std::move(name);
    add_entity_blocks(g, ents, streams, pool);
    layout.groups.push_back(std::move(g));
  };
  switch (variant) {
    case FusionVariant::a:
      push("human", humans, {0, 1}, true);
      push("object", objects, {0, 1}, true);
      break;
    case FusionVariant::b:
      push("human", humans, {0, 1}, pooled);
      push("object", objects, {0, 1}, pooled);
      break;
    case FusionVariant::c:
      push("visual", all, {1}, pooled);
      push("geometric", all, {0}, pooled);
      break;
    case FusionVariant::d:
      push("all", all, {0, 1}, pooled);
      break;
  }
  layout.slot_block.assign(static_cast<std::size_t>(2 * entities), -1);
  int next = 0;
  for (const auto& g : layout.groups) {
    for (const auto& blk : g.blocks) {
      for (int s : blk) layout.slot_block[static_cast<std::size_t>(s)] = next;
      ++next;
    }
  }
  layout.total_blocks = next;
  return layout;
}

template <class S>
FusionParams<S> FusionParams<S>::make(ParamSet<S>& ps, const CounterRng& rng, const FusionConfig& cfg,
                                      int human_slots, int object_slots, int c2) {
  FusionParams p;
  p.layout = make_fusion_layout(cfg.variant, cfg.pooling, human_slots, object_slots);
  if (cfg.use_caf) {
    for (std::size_t g = 0; g < p.layout.groups.size(); ++g) {
      const int channels = static_cast<int>(p.layout.groups[g].blocks.size()) * c2;
      const int r = reduced_width(channels, cfg.reduction, cfg.min_reduced);
      const std::string base = "fusion." + p.layout.groups[g].name;
      p.attention.push_back({Linear<S>::make(ps, rng, base + ".squeeze", channels, r),
                             Linear<S>::make(ps, rng, base + ".excite", r, channels)});
    }
  }
  p.merge = Linear<S>::make(ps, rng, "fusion.merge", 2 * c2, cfg.c3);
  return p;
}

template <class S>
Var<S> channel_attention(const Var<S>& descriptor, const ChannelAttentionParams<S>& params) {
  return ag::sigmoid(params.excite(ag::relu(params.squeeze(descriptor))));
}

template <class S>
Var<S> gap_time(const Var<S>& x) {
  if (x.value().rank() != 2) throw ShapeError("gap_time: expected [T, C]");
  const int frames = x.value().dim(0);
  const int ch = x.value().dim(1);
  return ag::block_pool(ag::reshape(x, Shape{frames, 1, ch}), {{0}});
}

template <class S>
FusedEntityFeatures<S> fuse(const GeometricEmbedding<S>& ge, const VisualEmbedding<S>& ve,
                            const std::vector<std::uint8_t>& presence, const FusionParams<S>& params,
                            const FusionConfig& cfg) {
  const auto& gs = ge.values.shape();
  if (gs.size() != 3 || gs != ve.values.shape()) {
    throw ShapeError("fuse: geometric " + shape_str(gs) + " and visual " + shape_str(ve.values.shape()) +
                     " embeddings must share [T, E, C2]");
  }
  const int frames = gs[0];
  const int entities = gs[1];
  const int c2 = gs[2];
  if (static_cast<int>(params.layout.slot_block.size()) != 2 * entities) {
    throw ShapeError("fuse: parameters were built for a different entity count");
  }
  if (presence.size() != static_cast<std::size_t>(frames) * entities) throw ShapeError("fuse: presence mask size");

  FusedEntityFeatures<S> out;
  Var<S> gv = ag::reshape(ag::concat_last<S>({ge.values, ve.values}), Shape{frames, 2 * entities, c2});
  if (cfg.use_caf) {
    std::vector<Var<S>> parts;
    for (std::size_t g = 0; g < params.layout.groups.size(); ++g) {
      Var<S> d = ag::block_pool(gv, params.layout.groups[g].blocks);
      parts.push_back(channel_attention(d, params.attention[g]));
    }
    Var<S> a = parts.size() == 1 ? parts[0] : ag::concat_last(parts);
    out.attention = a.value();
    gv = ag::channel_scale(gv, a, params.layout.slot_block);
  }
  Var<S> per_entity = ag::reshape(gv, Shape{frames, entities, 2 * c2});
  out.values = ag::mask_rows(params.merge(per_entity), row_weights<S>(presence));
  out.entity_mask = presence;
  return out;
}

#define GVHOI_INSTANTIATE_FUSION(S)                                                                        \
  template struct FusionParams<S>;                                                                        \
  template Var<S> channel_attention<S>(const Var<S>&, const ChannelAttentionParams<S>&);                  \
  template Var<S> gap_time<S>(const Var<S>&);                                                             \
  template FusedEntityFeatures<S> fuse<S>(const GeometricEmbedding<S>&, const VisualEmbedding<S>&,        \
                                          const std::vector<std::uint8_t>&, const FusionParams<S>&,       \
                                          const FusionConfig&);

GVHOI_INSTANTIATE_FUSION(float)
GVHOI_INSTANTIATE_FUSION(double)

}  // namespace gvhoi
