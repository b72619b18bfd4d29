#pragma once

#include <string>

#include "gvhoi/data_model.hpp"

namespace fixture {

// Track with every keypoint valid at the origin, zero visual features and all
// frames labelled class 0.
inline gvhoi::EntityTrack track(const std::string& id, gvhoi::EntityKind kind, int frames, int keypoints,
                                int visual_dim) {
  gvhoi::EntityTrack t;
  t.entity_id = id;
  t.kind = kind;
  t.keypoints = gvhoi::Tensor<float>({frames, keypoints, 2});
  t.keypoint_mask.assign(static_cast<std::size_t>(frames) * keypoints, 1);
  t.visual = gvhoi::Tensor<float>({frames, visual_dim});
  t.labels.assign(static_cast<std::size_t>(frames), 0);
  t.label_mask.assign(static_cast<std::size_t>(frames), 1);
  return t;
}

inline gvhoi::EntitySequence sequence(const std::string& id, int frames, int humans, int objects, int keypoints,
                                      int visual_dim) {
  gvhoi::EntitySequence s;
  s.video_id = id;
  s.frames = frames;
  for (int h = 0; h < humans; ++h) {
    s.entities.push_back(track("h" + std::to_string(h), gvhoi::EntityKind::human, frames, keypoints, visual_dim));
    s.subject_ids.push_back(id + "_s" + std::to_string(h));
  }
  for (int o = 0; o < objects; ++o) {
    auto t = track("o" + std::to_string(o), gvhoi::EntityKind::object, frames, keypoints, visual_dim);
    for (int f = 0; f < frames; ++f) {
      for (int k = 2; k < keypoints; ++k) t.keypoint_mask[static_cast<std::size_t>(f) * keypoints + k] = 0;
    }
    s.entities.push_back(std::move(t));
  }
  return s;
}

}  // namespace fixture
