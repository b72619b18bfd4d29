#include "gvhoi/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gvhoi {

std::vector<GradcheckRow> gradcheck_params(const std::function<Var<double>()>& loss,
                                           const std::vector<std::pair<std::string, Var<double>>>& params,
                                           double tolerance, double step, const std::string& corrupt_group) {
  for (auto [name, v] : params) v.zero_grad();
  ag::backward(loss());

  std::vector<std::string> groups;
  for (const auto& [name, v] : params) {
    const auto g = ParamSet<double>::group_of(name);
    if (groups.empty() || groups.back() != g) {
      bool seen = false;
      for (const auto& x : groups) seen = seen || x == g;
      if (!seen) groups.push_back(g);
    }
  }
  if (!corrupt_group.empty() && std::find(groups.begin(), groups.end(), corrupt_group) == groups.end()) {
    throw ConfigError("gradcheck: unknown parameter group '" + corrupt_group + "'");
  }
  std::vector<GradcheckRow> rows;
  for (const auto& group : groups) {
    GradcheckRow row;
    row.group = group;
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (auto [name, v] : params) {
      if (ParamSet<double>::group_of(name) != group) continue;
      const Tensor<double> analytic = v.has_grad() ? v.grad() : Tensor<double>(v.shape());
      Tensor<double>& w = v.mutable_value();
      for (std::size_t i = 0; i < w.numel(); ++i) {
        const double orig = w[i];
        w[i] = orig + step;
        const double up = loss().value()[0];
        w[i] = orig - step;
        const double down = loss().value()[0];
        w[i] = orig;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[i] * (group == corrupt_group ? 1.5 : 1.0);
        diff_sq += (a - numeric) * (a - numeric);
        a_sq += a * a;
        n_sq += numeric * numeric;
        ++row.scalars;
      }
    }
    row.rel_error = std::sqrt(diff_sq) / std::max(std::sqrt(a_sq) + std::sqrt(n_sq), 1e-12);
    row.pass = row.rel_error < tolerance;
    rows.push_back(row);
  }
  for (auto [name, v] : params) v.zero_grad();
  return rows;
}

PreparedVideo micro_video(int frames, int human_slots, int object_slots, int keypoints, int visual_dim, int n_sub,
                          int n_aff, std::uint64_t seed) {
  const CounterRng rng = CounterRng(seed).fork("micro_video");
  PreparedVideo v;
  v.video_id = "micro";
  v.frames = frames;
  v.human_slots = human_slots;
  v.object_slots = object_slots;
  const int e_n = v.entities();
  v.geometry.frames = frames;
  v.geometry.entities = e_n;
  v.geometry.keypoints = keypoints;
  v.geometry.values = Tensor<float>(Shape{frames, e_n, keypoints, 4});
  v.geometry.mask.assign(static_cast<std::size_t>(frames) * e_n * keypoints, 1);
  for (std::size_t i = 0; i < v.geometry.values.numel(); ++i) {
    v.geometry.values[i] = static_cast<float>(rng.fork("geo").uniform(i) - 0.5);
  }
  // One masked keypoint keeps the masking paths on the checked graph.
  v.geometry.mask[1] = 0;
  for (int c = 0; c < 4; ++c) v.geometry.values[4 + static_cast<std::size_t>(c)] = 0.0f;
  v.visual = Tensor<float>(Shape{frames, e_n, visual_dim});
  for (std::size_t i = 0; i < v.visual.numel(); ++i) v.visual[i] = static_cast<float>(rng.fork("vis").normal(i));
  v.presence.assign(static_cast<std::size_t>(frames) * e_n, 1);
  v.labels.assign(static_cast<std::size_t>(frames) * e_n, -1);
  for (int t = 0; t < frames; ++t) {
    for (int e = 0; e < e_n; ++e) {
      const int n = e < human_slots ? n_sub : n_aff;
      if (n > 0) {
        v.labels[static_cast<std::size_t>(t) * e_n + e] =
            static_cast<int>(rng.fork("labels").below(static_cast<std::uint64_t>(t) * e_n + e, static_cast<std::uint64_t>(n)));
      }
    }
    v.slot_ids.clear();
  }
  for (int e = 0; e < e_n; ++e) v.slot_ids.push_back("e" + std::to_string(e));
  return v;
}

ModelConfig micro_model_config(const Json& cfg) {
  DataShape shape{3, 5, 2, 1, 3, 2};
  Json c = cfg;
  c["model"]["c1"] = 4;
  c["model"]["c2"] = 6;
  c["model"]["c3"] = 8;
  c["model"]["hidden"] = 3;
  c["model"]["heads"] = 1;
  c["fusion"]["reduction"] = 16;
  c["fusion"]["min_reduced"] = 4;
  c["gumbel"]["hard"] = false;
  return model_config(c, shape);
}

std::vector<GradcheckRow> gradcheck_model(const Json& cfg, double tolerance, const std::string& corrupt_group) {
  const ModelConfig mc = micro_model_config(cfg);
  Model<double> model = Model<double>::make(mc, 7);
  // Non-zero biases so their gradients are exercised away from the init point.
  for (auto [name, v] : model.params.entries()) {
    if (v.value().rank() == 1) {
      for (std::size_t i = 0; i < v.value().numel(); ++i) v.mutable_value()[i] = 0.1 * std::sin(1.0 + 0.7 * static_cast<double>(i));
    }
  }
  const PreparedVideo video = micro_video(3, mc.human_slots, mc.object_slots, mc.keypoints, mc.visual_dim,
                                          mc.n_sub_activities, mc.n_affordances, 11);
  ForwardOptions fo;
  fo.tau = 0.7;
  fo.sample_noise = true;
  fo.noise_rng = CounterRng(3).fork("gradcheck_noise");
  auto loss = [&]() { return head_loss(forward(model, video, fo).head, video.labels).total; };
  return gradcheck_params(loss, model.params.entries(), tolerance, 1e-6, corrupt_group);
}

}  // namespace gvhoi
