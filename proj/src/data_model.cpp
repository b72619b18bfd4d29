#include "gvhoi/data_model.hpp"

#include <algorithm>

#include "gvhoi/core/error.hpp"

namespace gvhoi {

const char* to_string(EntityKind kind) { return kind == EntityKind::human ? "human" : "object"; }

EntityKind entity_kind_from_string(const std::string& s) {
  if (s == "human") return EntityKind::human;
  if (s == "object") return EntityKind::object;
  throw DataError("unknown entity kind '" + s + "'");
}

int EntitySequence::humans() const {
  return static_cast<int>(std::count_if(entities.begin(), entities.end(),
                                        [](const EntityTrack& e) { return e.kind == EntityKind::human; }));
}

int EntitySequence::objects() const { return static_cast<int>(entities.size()) - humans(); }

void validate(const EntitySequence& seq) {
  const std::string where = "video '" + seq.video_id + "': ";
  if (seq.frames <= 0) throw DataError(where + "empty sequence");
  if (seq.humans() < 1) throw DataError(where + "needs at least one human entity");
  int budget = -1;
  int dv = -1;
  for (const auto& e : seq.entities) {
    const std::string ew = where + "entity '" + e.entity_id + "': ";
    if (e.keypoints.rank() != 3 || e.keypoints.dim(2) != 2) throw DataError(ew + "keypoints must be [T, K, 2]");
    if (e.frames() != seq.frames) throw DataError(ew + "keypoint frame count differs from sequence length");
    if (budget < 0) budget = e.keypoint_budget();
    if (e.keypoint_budget() != budget) throw DataError(ew + "keypoint budget differs between entities");
    if (e.keypoint_mask.size() != static_cast<std::size_t>(seq.frames) * budget) throw DataError(ew + "keypoint mask size");
    if (e.visual.rank() != 2 || e.visual.dim(0) != seq.frames) throw DataError(ew + "visual must be [T, Dv]");
    if (dv < 0) dv = e.visual_dim();
    if (e.visual_dim() != dv) throw DataError(ew + "visual width differs between entities");
    if (e.labels.size() != static_cast<std::size_t>(seq.frames)) throw DataError(ew + "label count");
    if (e.label_mask.size() != static_cast<std::size_t>(seq.frames)) throw DataError(ew + "label mask size");
    for (std::size_t i = 0; i < e.keypoint_mask.size(); ++i) {
      if (!e.keypoint_mask[i] && (e.keypoints[2 * i] != 0.0f || e.keypoints[2 * i + 1] != 0.0f)) {
        throw DataError(ew + "masked keypoint carries a nonzero value");
      }
    }
  }
}

GeometricFeatures derive_geometric_features(const EntitySequence& seq, const NormalizationSpec& norm) {
  if (seq.frames <= 0) throw DataError("empty sequence");
  GeometricFeatures g;
  g.frames = seq.frames;
  g.entities = static_cast<int>(seq.entities.size());
  g.keypoints = g.entities > 0 ? seq.entities[0].keypoint_budget() : 0;
  const int t_n = g.frames, e_n = g.entities, k_n = g.keypoints;
  g.values = Tensor<float>(Shape{t_n, e_n, k_n, 4});
  g.mask.assign(static_cast<std::size_t>(t_n) * e_n * k_n, 0);

  const double sx = 1.0 / norm.width;
  const double sy = 1.0 / norm.height;
  for (int e = 0; e < e_n; ++e) {
    const auto& tr = seq.entities[static_cast<std::size_t>(e)];
    for (int t = 0; t < t_n; ++t) {
      for (int k = 0; k < k_n; ++k) {
        const std::size_t src = static_cast<std::size_t>(t) * k_n + k;
        if (!tr.keypoint_mask[src]) continue;
        const std::size_t dst = (static_cast<std::size_t>(t) * e_n + e) * k_n + k;
        const double x = tr.keypoints[2 * src] * sx;
        const double y = tr.keypoints[2 * src + 1] * sy;
        double vx = 0.0, vy = 0.0;
        if (t > 0) {
          const std::size_t prev = static_cast<std::size_t>(t - 1) * k_n + k;
          if (tr.keypoint_mask[prev]) {
            vx = x - tr.keypoints[2 * prev] * sx;
            vy = y - tr.keypoints[2 * prev + 1] * sy;
          }
        }
        float* v = g.values.ptr() + dst * 4;
        v[0] = static_cast<float>(x);
        v[1] = static_cast<float>(y);
        v[2] = static_cast<float>(vx);
        v[3] = static_cast<float>(vy);
        g.mask[dst] = 1;
      }
    }
  }
  return g;
}

EntitySequence subsample(const EntitySequence& seq, int stride) {
  if (stride < 1) throw ConfigError("frame stride must be >= 1");
  if (stride == 1) return seq;
  EntitySequence out = seq;
  const int t_new = (seq.frames + stride - 1) / stride;
  out.frames = t_new;
  out.fps = seq.fps / stride;
  for (std::size_t i = 0; i < seq.entities.size(); ++i) {
    const auto& src = seq.entities[i];
    auto& dst = out.entities[i];
    const int k_n = src.keypoint_budget();
    const int dv = src.visual_dim();
    dst.keypoints = Tensor<float>(Shape{t_new, k_n, 2});
    dst.keypoint_mask.assign(static_cast<std::size_t>(t_new) * k_n, 0);
    dst.visual = Tensor<float>(Shape{t_new, dv});
    dst.labels.assign(static_cast<std::size_t>(t_new), -1);
    dst.label_mask.assign(static_cast<std::size_t>(t_new), 0);
    for (int t = 0; t < t_new; ++t) {
      const int ts = t * stride;
      std::copy_n(src.keypoints.ptr() + static_cast<std::size_t>(ts) * k_n * 2, k_n * 2,
                  dst.keypoints.ptr() + static_cast<std::size_t>(t) * k_n * 2);
      std::copy_n(src.keypoint_mask.begin() + static_cast<std::ptrdiff_t>(ts) * k_n, k_n,
                  dst.keypoint_mask.begin() + static_cast<std::ptrdiff_t>(t) * k_n);
      std::copy_n(src.visual.ptr() + static_cast<std::size_t>(ts) * dv, dv,
                  dst.visual.ptr() + static_cast<std::size_t>(t) * dv);
      dst.labels[static_cast<std::size_t>(t)] = src.labels[static_cast<std::size_t>(ts)];
      dst.label_mask[static_cast<std::size_t>(t)] = src.label_mask[static_cast<std::size_t>(ts)];
    }
  }
  return out;
}

SegmentTimeline extract_segments(const std::vector<int>& labels, const std::vector<std::uint8_t>& label_mask) {
  if (labels.size() != label_mask.size()) throw ShapeError("extract_segments: labels and mask differ in length");
  SegmentTimeline out;
  bool open = false;
  for (int t = 0; t < static_cast<int>(labels.size()); ++t) {
    if (!label_mask[static_cast<std::size_t>(t)]) {
      open = false;
      continue;
    }
    const int label = labels[static_cast<std::size_t>(t)];
    if (open && out.back().label == label && out.back().end == t - 1) {
      out.back().end = t;
    } else {
      out.push_back({t, t, label});
      open = true;
    }
  }
  return out;
}

std::vector<int> rasterize(const SegmentTimeline& timeline, int frames) {
  std::vector<int> out(static_cast<std::size_t>(frames), -1);
  for (const auto& s : timeline) {
    for (int t = std::max(0, s.start); t <= std::min(frames - 1, s.end); ++t) out[static_cast<std::size_t>(t)] = s.label;
  }
  return out;
}

}  // namespace gvhoi
