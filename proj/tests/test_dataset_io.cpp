#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "gvhoi/dataset_io.hpp"
#include "gvhoi/synth.hpp"
#include "oracles.hpp"

using namespace gvhoi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gvhoi_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

io::DatasetManifest manifest_for(const synth::Benchmark& b) {
  io::DatasetManifest m;
  m.name = b.name;
  m.width = synth::kWidth;
  m.height = synth::kHeight;
  m.keypoints = synth::kKeypoints;
  m.visual_dim = b.videos[0].entities[0].visual_dim();
  m.label_spaces["human"] = synth::human_action_names();
  m.label_spaces["object"] = synth::object_affordance_names();
  m.subjects = b.subjects;
  return m;
}

// Manifest with one video per subject group, subjects named s0, s1, ...
io::DatasetManifest registry(const std::vector<std::vector<std::string>>& videos) {
  io::DatasetManifest m;
  std::set<std::string> subjects;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    m.videos.push_back({"v" + std::to_string(i), videos[i], "act", ""});
    subjects.insert(videos[i].begin(), videos[i].end());
  }
  m.subjects.assign(subjects.begin(), subjects.end());
  return m;
}

void expect_disjoint(const io::DatasetManifest& m, const io::Fold& f) {
  std::set<std::string> train_subjects;
  for (const auto& id : f.train) {
    for (const auto& s : m.video(id).subject_ids) train_subjects.insert(s);
  }
  for (const auto& id : f.test) {
    for (const auto& s : m.video(id).subject_ids) EXPECT_FALSE(train_subjects.count(s)) << f.name << " " << s;
  }
}

}  // namespace

TEST(TensorFile, RoundTripAndHeaderLayout) {
  const fs::path dir = scratch_dir("tensor");
  const auto t = oracle::random_tensor<float>({3, 4, 2}, 1);
  io::write_tensor(dir / "a.bin", t);
  EXPECT_EQ(fs::file_size(dir / "a.bin"), 16u + 3 * 4 + 24 * 4);
  const auto back = io::read_tensor(dir / "a.bin");
  EXPECT_EQ(back.shape, t.shape);
  EXPECT_EQ(back.data, t.data);
  std::ifstream in(dir / "a.bin", std::ios::binary);
  char magic[6];
  in.read(magic, 6);
  EXPECT_EQ(std::string(magic, 6), "GVHOI1");
  fs::remove_all(dir);
}

TEST(TensorFile, CorruptMagicRejected) {
  const fs::path dir = scratch_dir("magic");
  io::write_tensor(dir / "a.bin", Tensor<float>({2, 2}, 1.0f));
  {
    std::fstream f(dir / "a.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  const auto msg = error_of([&] { io::read_tensor(dir / "a.bin"); });
  EXPECT_NE(msg.find("bad header"), std::string::npos) << msg;
  fs::remove_all(dir);
}

TEST(TensorFile, TruncationReportsExpectedAndActualBytes) {
  const fs::path dir = scratch_dir("trunc");
  io::write_tensor(dir / "a.bin", Tensor<float>({5, 3}, 2.0f));
  const auto full = fs::file_size(dir / "a.bin");
  ASSERT_EQ(full, 16u + 8 + 60);
  fs::resize_file(dir / "a.bin", full - 10);
  const auto msg = error_of([&] { io::read_tensor(dir / "a.bin"); });
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
  EXPECT_NE(msg.find("expected 84 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("got 74"), std::string::npos) << msg;
  fs::remove_all(dir);
}

TEST(Encoding, Base64AndBitsRoundTrip) {
  EXPECT_EQ(io::base64_encode({'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(io::base64_encode({'M', 'a'}), "TWE=");
  EXPECT_EQ(io::base64_encode({'M'}), "TQ==");
  RngStream rng(CounterRng(4));
  for (int n : {0, 1, 7, 8, 9, 63, 200}) {
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(n));
    for (auto& f : flags) f = rng.uniform() < 0.5;
    const auto packed = io::pack_bits(flags);
    EXPECT_EQ(packed.size(), static_cast<std::size_t>((n + 7) / 8));
    EXPECT_EQ(io::unpack_bits(io::base64_decode(io::base64_encode(packed)), flags.size()), flags);
  }
  EXPECT_EQ(io::pack_bits({1, 0, 0, 0, 0, 0, 0, 0, 1}), (std::vector<std::uint8_t>{1, 1}));
}

TEST(Dataset, WriteThenReadIsValueIdentical) {
  const fs::path dir = scratch_dir("roundtrip");
  const auto bench = synth::make_benchmark(synth::Preset::tiny, 3, 16);
  io::write_dataset(dir, manifest_for(bench), bench.videos);
  const auto man = io::load_manifest(dir);
  ASSERT_EQ(man.videos.size(), bench.videos.size());
  for (const auto& orig : bench.videos) {
    const auto back = io::load_video(man, orig.video_id);
    EXPECT_EQ(back.frames, orig.frames);
    EXPECT_EQ(back.subject_ids, orig.subject_ids);
    ASSERT_EQ(back.entities.size(), orig.entities.size());
    for (std::size_t e = 0; e < orig.entities.size(); ++e) {
      const auto& a = orig.entities[e];
      const auto& b = back.entities[e];
      EXPECT_EQ(a.entity_id, b.entity_id);
      EXPECT_EQ(a.kind, b.kind);
      EXPECT_EQ(a.keypoints.data, b.keypoints.data);
      EXPECT_EQ(a.keypoint_mask, b.keypoint_mask);
      EXPECT_EQ(a.visual.data, b.visual.data);
      EXPECT_EQ(a.labels, b.labels);
      EXPECT_EQ(a.label_mask, b.label_mask);
    }
  }
  fs::remove_all(dir);
}

TEST(Dataset, DataRootEnvironmentVariable) {
  const fs::path dir = scratch_dir("envroot");
  const auto bench = synth::make_benchmark(synth::Preset::tiny, 0, 8);
  io::write_dataset(dir / "tiny", manifest_for(bench), bench.videos);
  ::setenv("GVHOI_DATA_ROOT", dir.c_str(), 1);
  EXPECT_EQ(io::load_manifest("tiny").videos.size(), 4u);
  ::unsetenv("GVHOI_DATA_ROOT");
  EXPECT_THROW(io::load_manifest("tiny_missing_dataset"), DataError);
  fs::remove_all(dir);
}

TEST(Dataset, ChecksumMismatchNamesFile) {
  const fs::path dir = scratch_dir("checksum");
  const auto bench = synth::make_benchmark(synth::Preset::tiny, 0, 8);
  io::write_dataset(dir, manifest_for(bench), bench.videos);
  fs::path victim;
  for (const auto& p : fs::directory_iterator(dir / "tensors")) {
    if (p.path().string().find("_vis.bin") != std::string::npos) victim = p.path();
  }
  ASSERT_FALSE(victim.empty());
  {
    std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  const auto man = io::load_manifest(dir);
  std::string msg;
  for (const auto& v : man.videos) {
    const auto m = error_of([&] { io::load_video(man, v.video_id); });
    if (!m.empty()) msg = m;
  }
  EXPECT_NE(msg.find("checksum"), std::string::npos) << msg;
  EXPECT_NE(msg.find(victim.filename().string()), std::string::npos) << msg;
  fs::remove_all(dir);
}

TEST(Folds, FourSubjectsLeaveOneOutGivesFourFolds) {
  const auto m = registry({{"a"}, {"a"}, {"b"}, {"c"}, {"d"}, {"d"}});
  const auto folds = io::make_folds(m, io::Protocol::leave_one_subject_out);
  ASSERT_EQ(folds.size(), 4u);
  std::multiset<std::string> tested;
  for (const auto& f : folds) {
    expect_disjoint(m, f);
    tested.insert(f.test.begin(), f.test.end());
  }
  EXPECT_EQ(tested.size(), m.videos.size());
  for (const auto& v : m.videos) EXPECT_EQ(tested.count(v.video_id), 1u);
}

TEST(Folds, LeaveTwoOutNeedsEnoughSubjects) {
  EXPECT_THROW(io::make_folds(registry({{"a"}, {"b"}}), io::Protocol::leave_two_subjects_out), ConfigError);
  const auto m = registry({{"a"}, {"b"}, {"c"}, {"d"}, {"e"}, {"f"}});
  const auto folds = io::make_folds(m, io::Protocol::leave_two_subjects_out);
  EXPECT_EQ(folds.size(), 3u);
  for (const auto& f : folds) expect_disjoint(m, f);
}

TEST(Folds, FixedTestSubjectsSingleSplit) {
  const auto m = registry({{"a", "b"}, {"c"}, {"d", "e"}, {"f"}, {"a", "f"}});
  const auto folds = io::make_folds(m, io::Protocol::fixed_test_subjects, {"d", "e", "f"});
  ASSERT_EQ(folds.size(), 1u);
  expect_disjoint(m, folds[0]);
  EXPECT_EQ(folds[0].test, (std::vector<std::string>{"v2", "v3"}));
  EXPECT_EQ(folds[0].excluded, (std::vector<std::string>{"v4"}));
  EXPECT_THROW(io::make_folds(m, io::Protocol::fixed_test_subjects, {"zz"}), ConfigError);
}

TEST(Folds, CoOccurringSubjectsStayTogether) {
  const auto m = registry({{"a", "b"}, {"b", "c"}, {"d"}, {"e"}});
  const auto folds = io::make_folds(m, io::Protocol::leave_one_subject_out);
  EXPECT_EQ(folds.size(), 3u);
  for (const auto& f : folds) expect_disjoint(m, f);
}

TEST(Folds, ProtocolNames) {
  EXPECT_EQ(io::protocol_from_string("loso"), io::Protocol::leave_one_subject_out);
  EXPECT_EQ(io::protocol_from_string("leave-two-subjects-out"), io::Protocol::leave_two_subjects_out);
  EXPECT_THROW(io::protocol_from_string("kfold"), ConfigError);
}
