#include "gvhoi/model.hpp"

namespace gvhoi {

std::vector<int> PreparedVideo::slot_labels(int slot) const {
  std::vector<int> out(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) out[static_cast<std::size_t>(t)] = labels[static_cast<std::size_t>(t) * entities() + slot];
  return out;
}

std::vector<std::uint8_t> PreparedVideo::slot_label_mask(int slot) const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) out[static_cast<std::size_t>(t)] = labels[static_cast<std::size_t>(t) * entities() + slot] >= 0;
  return out;
}

PreparedVideo prepare_video(const EntitySequence& seq, int human_slots, int object_slots,
                            const NormalizationSpec& norm) {
  validate(seq);
  if (seq.humans() > human_slots) {
    throw DataError("video '" + seq.video_id + "' has " + std::to_string(seq.humans()) + " humans but the model has " +
                    std::to_string(human_slots) + " human slots");
  }
  EntitySequence laid = seq;
  laid.entities.clear();
  for (const auto& e : seq.entities) {
    if (e.kind == EntityKind::human) laid.entities.push_back(e);
  }
  const int k = seq.entities.front().keypoint_budget();
  const int dv = seq.entities.front().visual_dim();
  auto pad = [&] {
    EntityTrack p;
    p.keypoints = Tensor<float>(Shape{seq.frames, k, 2});
    p.keypoint_mask.assign(static_cast<std::size_t>(seq.frames) * k, 0);
    p.visual = Tensor<float>(Shape{seq.frames, dv});
    p.labels.assign(static_cast<std::size_t>(seq.frames), -1);
    p.label_mask.assign(static_cast<std::size_t>(seq.frames), 0);
    return p;
  };
  while (static_cast<int>(laid.entities.size()) < human_slots) laid.entities.push_back(pad());
  int objects = 0;
  for (const auto& e : seq.entities) {
    if (e.kind == EntityKind::object && objects < object_slots) {
      laid.entities.push_back(e);
      ++objects;
    }
  }
  while (static_cast<int>(laid.entities.size()) < human_slots + object_slots) {
    laid.entities.push_back(pad());
    laid.entities.back().kind = EntityKind::object;
  }

  PreparedVideo v;
  v.video_id = seq.video_id;
  v.frames = seq.frames;
  v.human_slots = human_slots;
  v.object_slots = object_slots;
  v.geometry = derive_geometric_features(laid, norm);
  const int e_n = v.entities();
  v.visual = Tensor<float>(Shape{seq.frames, e_n, dv});
  v.presence.assign(static_cast<std::size_t>(seq.frames) * e_n, 0);
  v.labels.assign(static_cast<std::size_t>(seq.frames) * e_n, -1);
  for (int e = 0; e < e_n; ++e) {
    const auto& tr = laid.entities[static_cast<std::size_t>(e)];
    v.slot_ids.push_back(tr.entity_id);
    const bool real = !tr.entity_id.empty();
    for (int t = 0; t < seq.frames; ++t) {
      const std::size_t row = static_cast<std::size_t>(t) * e_n + e;
      v.presence[row] = real ? 1 : 0;
      if (real && tr.label_mask[static_cast<std::size_t>(t)]) v.labels[row] = tr.labels[static_cast<std::size_t>(t)];
      std::copy_n(tr.visual.ptr() + static_cast<std::size_t>(t) * dv, dv, v.visual.ptr() + row * dv);
    }
  }
  return v;
}

template <class S>
Model<S> Model<S>::make(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.keypoints < 1 || cfg.visual_dim < 1 || cfg.human_slots < 1) {
    throw ConfigError("model needs keypoints, visual width and at least one human slot");
  }
  Model m;
  m.cfg = cfg;
  const CounterRng rng = CounterRng(seed).fork("init");
  m.geometric = GeometricStreamParams<S>::make(m.params, rng, cfg.geometric, cfg.keypoints);
  m.visual = VisualStreamParams<S>::make(m.params, rng, cfg.visual_dim, cfg.geometric.c2);
  m.fusion = FusionParams<S>::make(m.params, rng, cfg.fusion, cfg.human_slots, cfg.object_slots, cfg.geometric.c2);
  m.ieg = IegParams<S>::make(m.params, rng, cfg.fusion.c3);
  m.head = HeadParams<S>::make(m.params, rng, cfg.head, cfg.fusion.c3, cfg.n_sub_activities, cfg.n_affordances);
  return m;
}

template <class S>
ForwardResult<S> forward(const Model<S>& model, const PreparedVideo& video, const ForwardOptions& opt) {
  const auto& cfg = model.cfg;
  if (video.human_slots != cfg.human_slots || video.object_slots != cfg.object_slots) {
    throw ShapeError("video '" + video.video_id + "' was prepared for a different slot layout");
  }
  const int frames = video.frames;
  const int entities = video.entities();
  ForwardResult<S> fr;

  GeometricEmbedding<S> ge = geometric_stream(video.geometry, model.geometric, cfg.geometric);
  VisualEmbedding<S> ve = project_visual(video.visual.template cast<S>(), video.presence, model.visual);
  FusedEntityFeatures<S> fused = fuse(ge, ve, video.presence, model.fusion, cfg.fusion);
  fr.fusion_attention = fused.attention;
  RefinedEntityFeatures<S> refined = refine(fused, model.ieg, cfg.ieg);
  fr.neighbor_attn = refined.neighbor_attn;

  Var<S> boundary;
  if (cfg.head.boundary_mode == BoundaryMode::concat) {
    BoundaryOutput<S> b;
    if (opt.uniform_boundary) {
      b = uniform_boundary<S>(frames, entities);
    } else {
      Tensor<S> noise;
      if (opt.sample_noise) noise = gumbel_noise<S>(opt.noise_rng, frames * entities, 2);
      b = boundary_sample(refined.values, model.head, cfg.head.gumbel, opt.tau, noise);
    }
    boundary = b.probability;
    fr.boundary_decisions = std::move(b.decisions);
  }
  fr.head = bigru_classify(refined.values, boundary, model.head, cfg.human_slots);
  return fr;
}

template <class S>
std::vector<int> frame_predictions(const ForwardResult<S>& fr, const PreparedVideo& video) {
  std::vector<int> pred(static_cast<std::size_t>(video.frames) * video.entities(), -1);
  auto scatter = [&](const Var<S>& logits, const std::vector<int>& rows) {
    if (!logits.defined()) return;
    const auto am = argmax_rows(logits.value());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (video.presence[static_cast<std::size_t>(rows[i])]) pred[static_cast<std::size_t>(rows[i])] = am[i];
    }
  };
  scatter(fr.head.human_logits, fr.head.human_rows);
  scatter(fr.head.object_logits, fr.head.object_rows);
  return pred;
}

#define GVHOI_INSTANTIATE_MODEL(S)                                                                   \
  template struct Model<S>;                                                                         \
  template ForwardResult<S> forward<S>(const Model<S>&, const PreparedVideo&, const ForwardOptions&); \
  template std::vector<int> frame_predictions<S>(const ForwardResult<S>&, const PreparedVideo&);

GVHOI_INSTANTIATE_MODEL(float)
GVHOI_INSTANTIATE_MODEL(double)

}  // namespace gvhoi
