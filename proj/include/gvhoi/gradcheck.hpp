#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gvhoi/config.hpp"
#include "gvhoi/model.hpp"

namespace gvhoi {

struct GradcheckRow {
  std::string group;
  std::size_t scalars = 0;
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12)
  bool pass = false;
};

// Central differences on every scalar of `params` against the analytic
// gradient of loss(). Parameters are restored afterwards.
std::vector<GradcheckRow> gradcheck_params(const std::function<Var<double>()>& loss,
                                           const std::vector<std::pair<std::string, Var<double>>>& params,
                                           double tolerance, double step = 1e-6,
                                           const std::string& corrupt_group = "");

// A micro video on the given slot layout: T frames, K keypoints, Dv visual.
PreparedVideo micro_video(int frames, int human_slots, int object_slots, int keypoints, int visual_dim,
                          int n_sub, int n_aff, std::uint64_t seed);

// Micro model configuration (widths <= 8) from a full RunConfig; ablation and
// variant switches are kept, dimensions shrunk. Gumbel runs soft with fixed noise.
ModelConfig micro_model_config(const Json& cfg);

// End-to-end check of every parameter group of the micro model (stage 2
// forward with sampled soft boundaries). corrupt_group scales that group's
// analytic gradient by 1.5 (negative control).
std::vector<GradcheckRow> gradcheck_model(const Json& cfg, double tolerance, const std::string& corrupt_group = "");

}  // namespace gvhoi
