#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvhoi/core/tensor.hpp"

namespace gvhoi {

enum class EntityKind : std::uint8_t { human, object };

const char* to_string(EntityKind kind);
EntityKind entity_kind_from_string(const std::string& s);

// One entity (person or object) tracked through a video.
struct EntityTrack {
  std::string entity_id;
  EntityKind kind = EntityKind::human;
  Tensor<float> keypoints;                 // [T, K, 2] pixels; masked entries are 0
  std::vector<std::uint8_t> keypoint_mask;  // [T * K]
  Tensor<float> visual;                    // [T, Dv]
  std::vector<int> labels;                 // [T]; -1 where label_mask is false
  std::vector<std::uint8_t> label_mask;    // [T]

  int frames() const { return keypoints.rank() > 0 ? keypoints.dim(0) : 0; }
  int keypoint_budget() const { return keypoints.rank() > 1 ? keypoints.dim(1) : 0; }
  int visual_dim() const { return visual.rank() > 1 ? visual.dim(1) : 0; }
};

struct EntitySequence {
  std::string video_id;
  int frames = 0;
  double fps = 30.0;
  std::string activity;
  std::vector<std::string> subject_ids;
  std::vector<EntityTrack> entities;

  int humans() const;
  int objects() const;
};

// Throws DataError naming the first violated invariant.
void validate(const EntitySequence& seq);

struct NormalizationSpec {
  double width = 1.0;
  double height = 1.0;
};

// Per-keypoint [x, y, vx, vy] with positions divided by the frame resolution
// and velocity the backward difference of normalized positions. Velocity is 0
// at frame 0 and wherever the keypoint is not valid at both t and t-1.
struct GeometricFeatures {
  int frames = 0;
  int entities = 0;
  int keypoints = 0;
  Tensor<float> values;               // [T, E, K, 4]
  std::vector<std::uint8_t> mask;     // [T * E * K]
};

GeometricFeatures derive_geometric_features(const EntitySequence& seq, const NormalizationSpec& norm);

// Keeps every stride-th frame.
EntitySequence subsample(const EntitySequence& seq, int stride);

struct Segment {
  int start = 0;  // inclusive frame index
  int end = 0;    // inclusive frame index
  int label = 0;

  int length() const { return end - start + 1; }
  bool operator==(const Segment&) const = default;
};

using SegmentTimeline = std::vector<Segment>;

// Maximal runs of equal label over valid frames. A masked frame ends a run.
SegmentTimeline extract_segments(const std::vector<int>& labels, const std::vector<std::uint8_t>& label_mask);

// Writes segment labels back into a frame array of the given length (-1 elsewhere).
std::vector<int> rasterize(const SegmentTimeline& timeline, int frames);

}  // namespace gvhoi
