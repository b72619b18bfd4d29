#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gvhoi/data_model.hpp"

namespace gvhoi::io {

// Binary tensor file: "GVHOI1", dtype byte (1 = f32), rank byte, element
// count (u64 LE) = 16-byte header; then rank u32 LE dims; then LE f32 data.
void write_tensor(const std::filesystem::path& path, const Tensor<float>& t);
Tensor<float> read_tensor(const std::filesystem::path& path);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Booleans packed LSB-first, 8 per byte.
std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& flags);
std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t count);

// FNV-1a 64 of a file's bytes, as "fnv1a64:<16 hex digits>".
std::string file_checksum(const std::filesystem::path& path);

struct VideoEntry {
  std::string video_id;
  std::vector<std::string> subject_ids;
  std::string activity;
  std::string meta;  // per-video JSON, relative to the dataset root
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string name;
  double width = 1.0;
  double height = 1.0;
  int keypoints = 0;
  double fps = 30.0;
  int visual_dim = 0;
  std::map<std::string, std::vector<std::string>> label_spaces;  // "human", "object"
  std::vector<std::string> subjects;
  std::vector<VideoEntry> videos;
  std::map<std::string, std::string> provenance;  // optional, e.g. generator seed and code version

  const VideoEntry& video(const std::string& id) const;
  int classes(EntityKind kind) const;
};

// Writes manifest.json, videos/<id>.json and tensors/<id>_<entity>_{kp,vis}.bin.
void write_dataset(const std::filesystem::path& dir, DatasetManifest manifest,
                   const std::vector<EntitySequence>& videos);

// Accepts a dataset directory or its manifest.json. Relative paths that do
// not exist are resolved against $GVHOI_DATA_ROOT.
DatasetManifest load_manifest(const std::filesystem::path& path);
EntitySequence load_video(const DatasetManifest& manifest, const std::string& video_id);

enum class Protocol { leave_one_subject_out, leave_two_subjects_out, fixed_test_subjects };
Protocol protocol_from_string(const std::string& s);
std::string to_string(Protocol p);

struct Fold {
  std::string name;
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<std::string> excluded;  // videos mixing test and training subjects
};

// Subjects that co-occur in a video form one group and always share a split.
// LOSO: one fold per group. L2SO: consecutive groups merged until each unit
// holds two or more subjects. Fixed: test videos are those whose subjects are
// all in test_subjects. Disjointness is checked on every fold.
std::vector<Fold> make_folds(const DatasetManifest& manifest, Protocol protocol,
                             const std::vector<std::string>& test_subjects = {});

}  // namespace gvhoi::io
