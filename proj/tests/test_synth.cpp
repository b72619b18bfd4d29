#include <gtest/gtest.h>

#include <map>

#include "gvhoi/synth.hpp"
#include "oracles.hpp"

using namespace gvhoi;
using namespace gvhoi::synth;

namespace {

ScenarioScript idle_script(int frames) {
  ScenarioScript s;
  s.n_humans = 2;
  s.n_objects = 1;
  s.frames = frames;
  s.timeline = {{{frames, Action::idle, -1}}, {{frames, Action::idle, -1}}};
  return s;
}

// Solves (A + ridge I) x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b, double ridge) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += ridge;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace

TEST(Synth, AllIdleNoiselessScriptHoldsStill) {
  const auto seq = generate(idle_script(30));
  for (const auto& e : seq.entities) {
    for (int t = 1; t < 30; ++t) {
      for (int k = 0; k < kKeypoints; ++k) {
        for (int c = 0; c < 2; ++c) ASSERT_EQ(e.keypoints.at({t, k, c}), e.keypoints.at({0, k, c}));
      }
    }
  }
}

TEST(Synth, ApproachPositionClosedForm) {
  const std::array<double, 2> p0{10, 20}, p1{110, -30};
  const int d = 11;
  for (int i = 0; i < d; ++i) {
    const auto p = approach_position(p0, p1, i, d);
    EXPECT_DOUBLE_EQ(p[0], p0[0] + (i / 10.0) * (p1[0] - p0[0]));
    EXPECT_DOUBLE_EQ(p[1], p0[1] + (i / 10.0) * (p1[1] - p0[1]));
  }
  EXPECT_EQ(approach_position(p0, p1, 0, d), p0);
  EXPECT_EQ(approach_position(p0, p1, d - 1, d), p1);
}

TEST(Synth, ApproachTrajectoryInGeneratedVideoIsLinear) {
  ScenarioScript s;
  s.n_humans = 1;
  s.n_objects = 1;
  s.frames = 21;
  s.timeline = {{{21, Action::approach, 0}}};
  const auto seq = generate(s);
  const auto& kp = seq.entities[0].keypoints;
  // The hip (keypoint 2) moves with constant per-frame displacement.
  const double dx = kp.at({1, 2, 0}) - kp.at({0, 2, 0});
  for (int t = 1; t < 21; ++t) EXPECT_NEAR(kp.at({t, 2, 0}) - kp.at({t - 1, 2, 0}), dx, 1e-3);
  EXPECT_NE(dx, 0.0);
}

TEST(Synth, SameSeedBitIdentical) {
  const auto a = make_benchmark(Preset::tiny, 17, 32);
  const auto b = make_benchmark(Preset::tiny, 17, 32);
  ASSERT_EQ(a.videos.size(), b.videos.size());
  for (std::size_t v = 0; v < a.videos.size(); ++v) {
    for (std::size_t e = 0; e < a.videos[v].entities.size(); ++e) {
      EXPECT_EQ(a.videos[v].entities[e].keypoints.data, b.videos[v].entities[e].keypoints.data);
      EXPECT_EQ(a.videos[v].entities[e].visual.data, b.videos[v].entities[e].visual.data);
      EXPECT_EQ(a.videos[v].entities[e].labels, b.videos[v].entities[e].labels);
    }
  }
  const auto c = make_benchmark(Preset::tiny, 18, 32);
  EXPECT_NE(a.videos[0].entities[0].visual.data, c.videos[0].entities[0].visual.data);
}

TEST(Synth, InconsistentDurationsRejected) {
  auto s = idle_script(30);
  s.timeline[1][0].duration = 29;
  try {
    generate(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("inconsistent durations"), std::string::npos);
  }
  auto missing = idle_script(30);
  missing.timeline[0] = {{30, Action::approach, 3}};
  EXPECT_THROW(generate(missing), ConfigError);
}

TEST(Synth, PresetShapes) {
  const auto tiny = make_benchmark(Preset::tiny, 0);
  EXPECT_EQ(tiny.videos.size(), 4u);
  for (const auto& v : tiny.videos) {
    EXPECT_EQ(v.frames, 200);
    EXPECT_EQ(v.entities.size(), 3u);
  }
  const auto small = make_benchmark(Preset::small, 0, 16);
  EXPECT_EQ(small.videos.size(), 24u);
  for (const auto& v : small.videos) {
    EXPECT_EQ(v.frames, 400);
    EXPECT_EQ(v.humans(), 3);
    EXPECT_EQ(v.objects(), 2);
  }
  EXPECT_EQ(small.test_ids.size() + small.train_ids.size(), 24u);
}

TEST(Synth, ObjectsUseTwoBoxCorners) {
  ScenarioScript s = idle_script(10);
  const auto seq = generate(s);
  const auto& obj = seq.entities[2];
  for (int t = 0; t < 10; ++t) {
    for (int k = 0; k < kKeypoints; ++k) EXPECT_EQ(obj.keypoint_mask[static_cast<std::size_t>(t) * kKeypoints + k], k < 2);
  }
}

TEST(Synth, LabelsRoundTripThroughSegments) {
  const auto b = make_benchmark(Preset::tiny, 2);
  for (const auto& v : b.videos) {
    for (const auto& e : v.entities) {
      const auto back = rasterize(extract_segments(e.labels, e.label_mask), v.frames);
      EXPECT_EQ(back, e.labels);
    }
  }
}

TEST(Synth, ClassBalanceWithinTwentyPercentOnSmall) {
  const auto b = make_benchmark(Preset::small, 0, 8);
  std::vector<long> counts(kHumanActions, 0);
  for (const auto& v : b.videos) {
    for (const auto& e : v.entities) {
      if (e.kind != EntityKind::human) continue;
      for (int l : e.labels) ++counts[static_cast<std::size_t>(l)];
    }
  }
  double mean = 0;
  for (long c : counts) mean += static_cast<double>(c) / kHumanActions;
  for (long c : counts) EXPECT_LE(std::abs(c - mean), 0.2 * mean) << c << " vs mean " << mean;
}

TEST(Synth, FullOcclusionMasksKeypointsButKeepsVisual) {
  ScenarioScript s = random_script(2, 1, 50, 4);
  s.occlusion_rate = 1.0;
  const auto seq = generate(s);
  for (const auto& e : seq.entities) {
    for (auto m : e.keypoint_mask) ASSERT_EQ(m, 0);
    for (float x : e.keypoints.data) ASSERT_EQ(x, 0.0f);
    double energy = 0;
    for (float x : e.visual.data) energy += x * x;
    EXPECT_GT(energy, 0.0);
  }
}

TEST(Synth, LinearClassifierOnVisualFeaturesLearnsHumanActions) {
  // Ridge regression onto one-hot targets, trained and scored on tiny.
  const auto b = make_benchmark(Preset::tiny, 0, 64);
  const std::size_t d = 65;  // features + bias
  std::vector<std::vector<double>> xtx(d, std::vector<double>(d, 0.0));
  std::vector<std::vector<double>> xty(kHumanActions, std::vector<double>(d, 0.0));
  std::vector<std::pair<std::vector<double>, int>> samples;
  for (const auto& v : b.videos) {
    for (const auto& e : v.entities) {
      if (e.kind != EntityKind::human) continue;
      for (int t = 0; t < v.frames; ++t) {
        std::vector<double> x(d, 1.0);
        for (int j = 0; j < 64; ++j) x[static_cast<std::size_t>(j)] = e.visual.at({t, j});
        samples.emplace_back(x, e.labels[static_cast<std::size_t>(t)]);
      }
    }
  }
  for (const auto& [x, y] : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) xtx[i][j] += x[i] * x[j];
      xty[static_cast<std::size_t>(y)][i] += x[i];
    }
  }
  std::vector<std::vector<double>> w;
  for (int c = 0; c < kHumanActions; ++c) w.push_back(solve(xtx, xty[static_cast<std::size_t>(c)], 1e-3));
  long correct = 0;
  for (const auto& [x, y] : samples) {
    int best = 0;
    double best_v = -1e300;
    for (int c = 0; c < kHumanActions; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < d; ++i) s += w[static_cast<std::size_t>(c)][i] * x[i];
      if (s > best_v) {
        best_v = s;
        best = c;
      }
    }
    correct += best == y;
  }
  EXPECT_GT(static_cast<double>(correct) / samples.size(), 0.8);
}
