#include "gvhoi/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "gvhoi/core/error.hpp"
#include "gvhoi/core/rng.hpp"

namespace gvhoi::synth {

const std::vector<std::string>& human_action_names() {
  static const std::vector<std::string> names{"idle", "approach", "manipulate", "retreat"};
  return names;
}

const std::vector<std::string>& object_affordance_names() {
  static const std::vector<std::string> names{"stationary", "manipulated"};
  return names;
}

std::array<double, 2> approach_position(const std::array<double, 2>& p0, const std::array<double, 2>& p1, int i,
                                        int duration) {
  if (duration <= 1) return p1;
  const double f = static_cast<double>(i) / static_cast<double>(duration - 1);
  return {p0[0] + f * (p1[0] - p0[0]), p0[1] + f * (p1[1] - p0[1])};
}

void validate_script(const ScenarioScript& s) {
  if (s.n_humans < 1 || s.n_objects < 0) throw ConfigError("script needs at least one human");
  if (s.frames < 1) throw ConfigError("script needs at least one frame");
  if (static_cast<int>(s.timeline.size()) != s.n_humans) throw ConfigError("script needs one timeline per human");
  if (!s.subject_ids.empty() && static_cast<int>(s.subject_ids.size()) != s.n_humans) {
    throw ConfigError("script needs one subject id per human");
  }
  if (s.visual_dim < 1) throw ConfigError("visual_dim must be positive");
  for (std::size_t h = 0; h < s.timeline.size(); ++h) {
    int total = 0;
    for (const auto& st : s.timeline[h]) {
      if (st.duration < 1) throw ConfigError("script step durations must be positive");
      if (st.action != Action::idle && (st.target < 0 || st.target >= s.n_objects)) {
        throw ConfigError("script step of human " + std::to_string(h) + " targets a missing object");
      }
      total += st.duration;
    }
    if (total != s.frames) {
      throw ConfigError("inconsistent durations: human " + std::to_string(h) + " timeline sums to " +
                        std::to_string(total) + " frames, expected " + std::to_string(s.frames));
    }
  }
}

namespace {

using Point = std::array<double, 2>;

constexpr int kVisualInputs = kHumanActions + kObjectAffordances + 2;
constexpr double kPi = std::numbers::pi;

// Skeleton offsets relative to the hip centroid: head, neck, hip, foot, hand.
constexpr std::array<Point, kKeypoints> kSkeleton{{{0, -60}, {0, -40}, {0, 0}, {-10, 40}, {15, -30}}};
constexpr int kHand = 4;

struct Layout {
  std::vector<Point> home;
  std::vector<double> scale;
  std::vector<Point> object_base;
};

Layout make_layout(const ScenarioScript& s, const CounterRng& rng) {
  Layout l;
  RngStream r(rng.fork("layout"));
  for (int h = 0; h < s.n_humans; ++h) {
    const double slot = (h + 0.5) / s.n_humans;
    l.home.push_back({60.0 + slot * (kWidth - 120.0) + r.uniform(-20.0, 20.0), r.uniform(330.0, 400.0)});
    l.scale.push_back(r.uniform(0.9, 1.1));
  }
  for (int o = 0; o < s.n_objects; ++o) {
    const double slot = (o + 0.5) / s.n_objects;
    l.object_base.push_back({80.0 + slot * (kWidth - 160.0) + r.uniform(-15.0, 15.0), r.uniform(150.0, 210.0)});
  }
  return l;
}

Point stand_point(const Layout& l, int human, int object, int n_humans) {
  const double dx = (human - 0.5 * (n_humans - 1)) * 30.0;
  return {l.object_base[static_cast<std::size_t>(object)][0] + dx, l.object_base[static_cast<std::size_t>(object)][1] + 90.0};
}

}  // namespace

EntitySequence generate(const ScenarioScript& s) {
  validate_script(s);
  const CounterRng rng(s.seed);
  const Layout layout = make_layout(s, rng);
  const int frames = s.frames;
  const int entities = s.n_humans + s.n_objects;

  // Per-human hip trajectory and actions.
  std::vector<std::vector<Point>> hip(static_cast<std::size_t>(s.n_humans), std::vector<Point>(static_cast<std::size_t>(frames)));
  std::vector<std::vector<Point>> hand_extra(static_cast<std::size_t>(s.n_humans),
                                             std::vector<Point>(static_cast<std::size_t>(frames), Point{0, 0}));
  std::vector<std::vector<int>> action(static_cast<std::size_t>(s.n_humans), std::vector<int>(static_cast<std::size_t>(frames)));
  std::vector<std::vector<int>> manipulated(static_cast<std::size_t>(s.n_objects), std::vector<int>(static_cast<std::size_t>(frames), 0));
  for (int h = 0; h < s.n_humans; ++h) {
    const auto& steps = s.timeline[static_cast<std::size_t>(h)];
    const Point home = layout.home[static_cast<std::size_t>(h)];
    Point pos = home;
    const auto& first = steps.front();
    if (first.action == Action::manipulate || first.action == Action::retreat) {
      pos = stand_point(layout, h, first.target, s.n_humans);
    }
    int t = 0;
    for (const auto& st : steps) {
      const Point start = pos;
      for (int i = 0; i < st.duration; ++i, ++t) {
        const auto ts = static_cast<std::size_t>(t);
        action[static_cast<std::size_t>(h)][ts] = static_cast<int>(st.action);
        Point p = start;
        switch (st.action) {
          case Action::idle:
            break;
          case Action::approach:
            p = approach_position(start, stand_point(layout, h, st.target, s.n_humans), i, st.duration);
            break;
          case Action::manipulate: {
            const double phase = 2.0 * kPi * i / 16.0;
            p = {start[0] + 4.0 * std::sin(phase), start[1]};
            hand_extra[static_cast<std::size_t>(h)][ts] = {10.0 * std::sin(phase), 6.0 * std::cos(phase)};
            manipulated[static_cast<std::size_t>(st.target)][ts] = 1;
            break;
          }
          case Action::retreat:
            p = approach_position(start, home, i, st.duration);
            break;
        }
        hip[static_cast<std::size_t>(h)][ts] = p;
      }
      pos = hip[static_cast<std::size_t>(h)][static_cast<std::size_t>(t - 1)];
      if (st.action == Action::manipulate) pos = start;
    }
  }

  // Dataset-level projection: depends only on the visual width, so every video
  // of a benchmark shares it.
  const CounterRng proj_rng = CounterRng(0x5eedULL).fork("visual_projection").fork(static_cast<std::uint64_t>(s.visual_dim));
  std::vector<double> proj(static_cast<std::size_t>(s.visual_dim) * kVisualInputs);
  for (std::size_t i = 0; i < proj.size(); ++i) proj[i] = proj_rng.normal(i);

  EntitySequence seq;
  seq.video_id = s.video_id;
  seq.frames = frames;
  seq.fps = 30.0;
  seq.activity = "synthetic";
  for (int h = 0; h < s.n_humans; ++h) {
    seq.subject_ids.push_back(s.subject_ids.empty() ? s.video_id + "_h" + std::to_string(h)
                                                    : s.subject_ids[static_cast<std::size_t>(h)]);
  }
  const CounterRng noise_rng = rng.fork("keypoint_noise");
  const CounterRng occ_rng = rng.fork("occlusion");
  const CounterRng vis_rng = rng.fork("visual_noise");
  for (int e = 0; e < entities; ++e) {
    const bool human = e < s.n_humans;
    EntityTrack tr;
    tr.kind = human ? EntityKind::human : EntityKind::object;
    tr.entity_id = human ? "human" + std::to_string(e) : "object" + std::to_string(e - s.n_humans);
    tr.keypoints = Tensor<float>(Shape{frames, kKeypoints, 2});
    tr.keypoint_mask.assign(static_cast<std::size_t>(frames) * kKeypoints, 0);
    tr.visual = Tensor<float>(Shape{frames, s.visual_dim});
    tr.labels.assign(static_cast<std::size_t>(frames), -1);
    tr.label_mask.assign(static_cast<std::size_t>(frames), 1);
    const std::uint64_t ebase = static_cast<std::uint64_t>(e) * frames;
    for (int t = 0; t < frames; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      std::array<Point, kKeypoints> kp{};
      int used = kKeypoints;
      Point disp{0, 0};
      int code = 0;
      if (human) {
        const auto hs = static_cast<std::size_t>(e);
        const Point c = hip[hs][ts];
        for (int k = 0; k < kKeypoints; ++k) {
          kp[static_cast<std::size_t>(k)] = {c[0] + layout.scale[hs] * kSkeleton[static_cast<std::size_t>(k)][0],
                                             c[1] + layout.scale[hs] * kSkeleton[static_cast<std::size_t>(k)][1]};
        }
        kp[kHand][0] += hand_extra[hs][ts][0];
        kp[kHand][1] += hand_extra[hs][ts][1];
        disp = {(c[0] - layout.home[hs][0]) / kWidth, (c[1] - layout.home[hs][1]) / kHeight};
        code = action[hs][ts];
        tr.labels[ts] = code;
      } else {
        const auto os = static_cast<std::size_t>(e - s.n_humans);
        Point c = layout.object_base[os];
        const int m = manipulated[os][ts];
        if (m) {
          const double phase = 2.0 * kPi * t / 12.0;
          c = {c[0] + 6.0 * std::sin(phase), c[1] + 3.0 * std::cos(phase)};
        }
        // Bounding-box diagonal corners; remaining keypoint slots stay masked.
        kp[0] = {c[0] - 12.0, c[1] - 12.0};
        kp[1] = {c[0] + 12.0, c[1] + 12.0};
        used = 2;
        disp = {(c[0] - layout.object_base[os][0]) / kWidth, (c[1] - layout.object_base[os][1]) / kHeight};
        code = kHumanActions + m;
        tr.labels[ts] = m;
      }
      for (int k = 0; k < used; ++k) {
        const std::uint64_t id = (ebase + static_cast<std::uint64_t>(t)) * kKeypoints + static_cast<std::uint64_t>(k);
        if (s.occlusion_rate > 0.0 && occ_rng.uniform(id) < s.occlusion_rate) continue;
        double x = kp[static_cast<std::size_t>(k)][0];
        double y = kp[static_cast<std::size_t>(k)][1];
        if (s.noise_sigma > 0.0) {
          x += s.noise_sigma * kWidth * noise_rng.normal(2 * id);
          y += s.noise_sigma * kHeight * noise_rng.normal(2 * id + 1);
        }
        const std::size_t at = ts * kKeypoints + static_cast<std::size_t>(k);
        tr.keypoints[2 * at] = static_cast<float>(x);
        tr.keypoints[2 * at + 1] = static_cast<float>(y);
        tr.keypoint_mask[at] = 1;
      }
      std::array<double, kVisualInputs> u{};
      u[static_cast<std::size_t>(code)] = 1.0;
      u[kVisualInputs - 2] = 5.0 * disp[0];
      u[kVisualInputs - 1] = 5.0 * disp[1];
      float* v = tr.visual.ptr() + ts * static_cast<std::size_t>(s.visual_dim);
      for (int d = 0; d < s.visual_dim; ++d) {
        double acc = 0.0;
        for (int j = 0; j < kVisualInputs; ++j) acc += proj[static_cast<std::size_t>(d) * kVisualInputs + j] * u[static_cast<std::size_t>(j)];
        const std::uint64_t id = (ebase + static_cast<std::uint64_t>(t)) * static_cast<std::uint64_t>(s.visual_dim) +
                                 static_cast<std::uint64_t>(d);
        v[d] = static_cast<float>(acc + s.visual_noise * vis_rng.normal(id));
      }
    }
    seq.entities.push_back(std::move(tr));
  }
  validate(seq);
  return seq;
}

ScenarioScript random_script(int n_humans, int n_objects, int frames, std::uint64_t seed) {
  if (n_objects < 1) throw ConfigError("random scripts need at least one object to interact with");
  ScenarioScript s;
  s.n_humans = n_humans;
  s.n_objects = n_objects;
  s.frames = frames;
  s.seed = seed;
  RngStream r(CounterRng(seed).fork("script"));
  const int lo = std::max(2, frames / 16);
  const int hi = std::max(lo, frames / 8);
  for (int h = 0; h < n_humans; ++h) {
    std::vector<ScriptStep> steps;
    int phase = r.range(0, kHumanActions - 1);
    int target = r.range(0, n_objects - 1);
    int left = frames;
    bool first = true;
    while (left > 0) {
      int d = r.range(lo, hi);
      // A random phase offset: the first step is cut short, so entities start mid-action.
      if (first) d = r.range(1, d);
      first = false;
      d = std::min(d, left);
      const auto a = static_cast<Action>(phase);
      steps.push_back({d, a, a == Action::idle ? -1 : target});
      left -= d;
      phase = (phase + 1) % kHumanActions;
      if (phase == static_cast<int>(Action::approach)) target = r.range(0, n_objects - 1);
    }
    s.timeline.push_back(std::move(steps));
  }
  return s;
}

Preset preset_from_string(const std::string& s) {
  if (s == "tiny") return Preset::tiny;
  if (s == "small") return Preset::small;
  throw ConfigError("unknown synthetic preset '" + s + "' (expected tiny or small)");
}

std::string to_string(Preset p) { return p == Preset::tiny ? "tiny" : "small"; }

Benchmark make_benchmark(Preset preset, std::uint64_t seed, int visual_dim) {
  const bool tiny = preset == Preset::tiny;
  const int videos = tiny ? 4 : 24;
  const int humans = tiny ? 2 : 3;
  const int objects = tiny ? 1 : 2;
  const int frames = tiny ? 200 : 400;
  const int groups = tiny ? 4 : 4;
  Benchmark b;
  b.name = "synthetic-" + to_string(preset);
  for (int g = 0; g < groups; ++g) {
    for (int h = 0; h < humans; ++h) b.subjects.push_back("S" + std::to_string(g * humans + h + 1));
  }
  const CounterRng root = CounterRng(seed).fork(b.name);
  for (int i = 0; i < videos; ++i) {
    ScenarioScript s = random_script(humans, objects, frames, root.fork(static_cast<std::uint64_t>(i)).key());
    char id[32];
    std::snprintf(id, sizeof id, "v%03d", i);
    s.video_id = id;
    s.noise_sigma = 0.002;
    s.occlusion_rate = 0.05;
    s.visual_noise = 0.3;
    s.visual_dim = visual_dim;
    const int g = i % groups;
    for (int h = 0; h < humans; ++h) s.subject_ids.push_back(b.subjects[static_cast<std::size_t>(g * humans + h)]);
    b.videos.push_back(generate(s));
    (g == groups - 1 ? b.test_ids : b.train_ids).push_back(id);
  }
  for (int h = 0; h < humans; ++h) b.test_subjects.push_back(b.subjects[static_cast<std::size_t>((groups - 1) * humans + h)]);
  return b;
}

}  // namespace gvhoi::synth
