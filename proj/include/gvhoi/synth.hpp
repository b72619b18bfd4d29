#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gvhoi/data_model.hpp"

namespace gvhoi::synth {

enum class Action : std::uint8_t { idle, approach, manipulate, retreat };
inline constexpr int kHumanActions = 4;
inline constexpr int kObjectAffordances = 2;  // stationary, manipulated

const std::vector<std::string>& human_action_names();
const std::vector<std::string>& object_affordance_names();

struct ScriptStep {
  int duration = 0;
  Action action = Action::idle;
  int target = -1;  // object index for approach / manipulate / retreat
};

struct ScenarioScript {
  int n_humans = 1;
  int n_objects = 1;
  int frames = 0;
  std::vector<std::vector<ScriptStep>> timeline;  // one list per human
  double noise_sigma = 0.0;     // keypoint jitter, normalized units
  double occlusion_rate = 0.0;  // probability a keypoint is dropped in a frame
  double visual_noise = 0.3;
  int visual_dim = 64;
  std::uint64_t seed = 0;
  std::string video_id = "synthetic";
  std::vector<std::string> subject_ids;  // one per human; defaults to "<video_id>_h<i>"
};

inline constexpr int kKeypoints = 5;
inline constexpr double kWidth = 640.0;
inline constexpr double kHeight = 480.0;

// Position at frame i of a D-frame linear move from p0 to p1: p0 + (i/(D-1))(p1-p0).
std::array<double, 2> approach_position(const std::array<double, 2>& p0, const std::array<double, 2>& p1, int i,
                                        int duration);

// Throws ConfigError when the timelines do not each sum to script.frames or
// reference a missing object.
void validate_script(const ScenarioScript& script);

// Deterministic given script.seed. Human labels are the script actions;
// objects are labelled manipulated while any human manipulates them.
EntitySequence generate(const ScenarioScript& script);

enum class Preset { tiny, small };
Preset preset_from_string(const std::string& s);
std::string to_string(Preset p);

struct Benchmark {
  std::string name;
  std::vector<EntitySequence> videos;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::string> test_subjects;
  std::vector<std::string> subjects;  // registry in order
};

// tiny: 4 videos, 2 humans + 1 object, 200 frames.
// small: 24 videos, 3 humans + 2 objects, 400 frames.
Benchmark make_benchmark(Preset preset, std::uint64_t seed, int visual_dim = 64);

// A random concurrent-partial-interaction script: every human cycles through
// idle, approach, manipulate, retreat with random durations and a random phase.
ScenarioScript random_script(int n_humans, int n_objects, int frames, std::uint64_t seed);

}  // namespace gvhoi::synth
