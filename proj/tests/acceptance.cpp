// Acceptance harness: runs each primary criterion and prints one PASS/FAIL
// line per criterion. Exit status is 0 only when every selected criterion
// passes.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "gvhoi/experiment.hpp"
#include "gvhoi/gradcheck.hpp"
#include "gvhoi/training.hpp"
#include "gvhoi/version.hpp"
#include "oracles.hpp"

using namespace gvhoi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Every report emitted by the other criteria, checked by criterion 8.
std::vector<std::pair<std::string, std::vector<ReportRow>>> g_reports;

std::vector<int> random_permutation(int n, std::uint64_t seed, int first = 0) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  RngStream r{CounterRng(seed)};
  for (int i = n - 1; i > first; --i) {
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(first + static_cast<int>(r.below(static_cast<std::uint64_t>(i - first + 1))))]);
  }
  return p;
}

// ---------------------------------------------------------------------------
// 1. Metric oracle

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  const SegmentTimeline gt{{0, 9, 0}, {10, 19, 1}};
  const SegmentTimeline pred{{0, 3, 0}, {4, 19, 1}};
  const double want[] = {1.0, 1.0, 0.5};
  const double ks[] = {0.10, 0.25, 0.50};
  for (int i = 0; i < 3; ++i) {
    const double got = score(f1_at_k(pred, gt, ks[i])).f1;
    if (got != want[i]) return {false, "worked example F1@" + fmt("%.2f", ks[i]) + " = " + fmt("%.6f", got)};
  }
  RngStream rng(CounterRng(2024).fork("acceptance-metric"));
  int gaps = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int frames = rng.range(1, 40);
    const auto g = oracle::random_timeline(rng, frames, 6, 3);
    const auto p = oracle::random_timeline(rng, frames, 6, 3);
    for (double k : ks) {
      const auto c = f1_at_k(p, g, k);
      const auto o = oracle::greedy(p, g, k);
      if (c.tp != o.tp || c.fp != o.fp || c.fn != o.fn || score(c).f1 != oracle::f1(o)) {
        return {false, "trial " + std::to_string(trial) + " differs from the brute-force matcher"};
      }
      const long best = oracle::optimal_tp(p, g, k);
      if (f1_at_k_optimal(p, g, k).tp != best) return {false, "optimal matcher differs at trial " + std::to_string(trial)};
      gaps += best != c.tp;
    }
  }
  const double secs = seconds_since(t0);
  return {secs < 10.0, "1000 timelines x 3 thresholds agree; worked example 1.0/1.0/0.5; " + std::to_string(gaps) +
                           " greedy<optimal cases; " + fmt("%.2fs", secs)};
}

// ---------------------------------------------------------------------------
// 2. Gradient suite

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto rows = gradcheck_model(default_config(), 1e-4);
  const std::set<std::string> required{"gat",  "temporal_mix", "geo_mlp", "vis_mlp", "fusion",    "ieg",
                                       "boundary", "gru_fwd", "gru_bwd", "cls_human", "cls_object"};
  std::set<std::string> seen;
  double worst = 0.0;
  std::string worst_group;
  bool pass = true;
  for (const auto& r : rows) {
    seen.insert(r.group);
    pass = pass && r.pass;
    if (r.rel_error >= worst) {
      worst = r.rel_error;
      worst_group = r.group;
    }
  }
  for (const auto& g : required) {
    if (!seen.count(g)) return {false, "group " + g + " was not checked"};
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 120.0, std::to_string(rows.size()) + " groups, worst rel err " + fmt("%.2e", worst) + " (" +
                                    worst_group + "); " + fmt("%.2fs", secs)};
}

// ---------------------------------------------------------------------------
// 3. Attention invariants

Outcome attention_invariants() {
  const int n_instances = 200;
  RngStream rng(CounterRng(3).fork("acceptance-attention"));
  // GAT rows.
  for (int i = 0; i < n_instances; ++i) {
    const int n = rng.range(1, 16), c = rng.range(1, 8);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
    for (auto& m : mask) m = rng.uniform() < 0.7;
    mask[rng.below(static_cast<std::uint64_t>(n))] = 1;
    const auto scoring = i % 2 ? kernels::GatScoring::v2 : kernels::GatScoring::v1;
    const auto a = gat_attention(oracle::random_tensor<double>({n, c}, 10000 + i, 2.0), mask,
                                 oracle::random_tensor<double>({2 * c}, 20000 + i), 0.2, scoring);
    for (int r = 0; r < n; ++r) {
      double sum = 0;
      for (int j = 0; j < n; ++j) {
        const double v = a.at({r, j});
        if ((!mask[static_cast<std::size_t>(j)] || !mask[static_cast<std::size_t>(r)]) && v != 0.0) {
          return {false, "GAT mass on a masked keypoint"};
        }
        sum += v;
      }
      if (mask[static_cast<std::size_t>(r)] && std::abs(sum - 1.0) > 1e-6) return {false, "GAT row sum " + fmt("%.9f", sum)};
    }
  }
  // Channel attention.
  for (int i = 0; i < n_instances; ++i) {
    FusionConfig cfg;
    cfg.variant = static_cast<FusionVariant>(i % 4);
    cfg.pooling = i % 8 < 4 ? FusionPooling::time : FusionPooling::time_entity;
    cfg.c3 = 4;
    const int humans = rng.range(1, 3), objects = rng.range(0, 2), frames = rng.range(1, 6), c2 = rng.range(1, 6);
    const int e_n = humans + objects;
    ParamSet<double> ps;
    const auto params = FusionParams<double>::make(ps, CounterRng(30000 + i), cfg, humans, objects, c2);
    GeometricEmbedding<double> ge;
    ge.values = Var<double>(oracle::random_tensor<double>({frames, e_n, c2}, 40000 + i, 4.0));
    VisualEmbedding<double> ve;
    ve.values = Var<double>(oracle::random_tensor<double>({frames, e_n, c2}, 50000 + i, 4.0));
    const auto fused = fuse(ge, ve, std::vector<std::uint8_t>(static_cast<std::size_t>(frames * e_n), 1), params, cfg);
    for (double v : fused.attention.data) {
      if (!(v > 0.0 && v < 1.0)) return {false, "channel attention value " + fmt("%.17g", v) + " outside (0,1)"};
    }
  }
  // Neighbor weights under identical neighbor features, E = 3.
  for (int i = 0; i < n_instances; ++i) {
    const int c = rng.range(1, 8);
    const auto row = oracle::random_tensor<double>({c}, 60000 + i, 3.0);
    Tensor<double> s({3, c});
    const int target = i % 3;
    for (int e = 0; e < 3; ++e) {
      for (int k = 0; k < c; ++k) s.at({e, k}) = row[static_cast<std::size_t>(k)] + (e == target ? rng.normal() : 0.0);
    }
    for (double w : neighbor_attention(s, {1, 1, 1}, target)) {
      if (std::abs(w - 1.0) > 1e-12) return {false, "neighbor weight " + fmt("%.17g", w) + " under identical neighbors"};
    }
  }
  // Gumbel-Softmax.
  for (int i = 0; i < n_instances; ++i) {
    const int rows = rng.range(1, 8), cols = rng.range(2, 6);
    const double tau = rng.uniform(0.1, 5.0);
    const auto logits = oracle::random_tensor<double>({rows, cols}, 70000 + i, 4.0);
    const auto noise = gumbel_noise<double>(CounterRng(80000 + i), rows, cols);
    GumbelConfig soft;
    soft.hard = false;
    GumbelConfig hard;
    const auto ys = gumbel_softmax(Var<double>(logits), noise, soft, tau).value();
    const auto yh = gumbel_softmax(Var<double>(logits), noise, hard, tau).value();
    for (int r = 0; r < rows; ++r) {
      double sum = 0;
      int ones = 0, zeros = 0;
      for (int c = 0; c < cols; ++c) {
        sum += ys.at({r, c});
        ones += yh.at({r, c}) == 1.0;
        zeros += yh.at({r, c}) == 0.0;
      }
      if (std::abs(sum - 1.0) > 1e-6) return {false, "Gumbel-Softmax row sum " + fmt("%.9f", sum)};
      if (ones != 1 || zeros != cols - 1) return {false, "hard Gumbel-Softmax row is not one-hot"};
    }
  }
  return {true, std::to_string(n_instances) + " instances each: GAT rows, channel attention, neighbor weights, Gumbel"};
}

// ---------------------------------------------------------------------------
// 4. Equivariance and masking at 32-bit

template <class F>
void randomize_rank1(ParamSet<F>& ps, std::uint64_t seed) {
  const CounterRng rng(seed);
  std::size_t k = 0;
  for (auto [name, v] : ps.entries()) {
    if (v.value().rank() != 1) continue;
    for (std::size_t i = 0; i < v.value().numel(); ++i) v.mutable_value()[i] = static_cast<F>(0.3 * rng.normal(k++));
  }
}

Tensor<float> permute_axis1(const Tensor<float>& x, const std::vector<int>& perm) {
  Tensor<float> out(x.shape);
  const int t_n = x.dim(0), n = x.dim(1), c = x.dim(2);
  for (int t = 0; t < t_n; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < c; ++k) out.at({t, i, k}) = x.at({t, perm[static_cast<std::size_t>(i)], k});
    }
  }
  return out;
}

std::vector<std::uint8_t> permute_mask(const std::vector<std::uint8_t>& m, int frames, const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  std::vector<std::uint8_t> out(m.size());
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(t * n + i)] = m[static_cast<std::size_t>(t * n + perm[static_cast<std::size_t>(i)])];
  }
  return out;
}

Outcome equivariance_and_masking() {
  const int trials = 25;
  double dev_geo = 0, dev_fusion = 0, dev_ieg = 0, dev_mask = 0;
  for (int trial = 0; trial < trials; ++trial) {
    // Keypoint permutation through GAT and temporal mixing.
    {
      GeometricConfig cfg;
      cfg.c1 = 8;
      cfg.c2 = 6;
      ParamSet<float> ps;
      const auto params = GeometricStreamParams<float>::make(ps, CounterRng(trial), cfg, 3);
      randomize_rank1(ps, 100 + trial);
      const int frames = 3, nodes = 9;
      const auto x = oracle::random_tensor<float>({frames, nodes, 4}, 200 + trial);
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(frames * nodes), 1);
      RngStream r{CounterRng(300 + trial)};
      for (auto& m : mask) m = r.uniform() < 0.8;
      const auto perm = random_permutation(nodes, 400 + trial);
      const auto base = temporal_mix(gat_layer(Var<float>(x), mask, params.gat, cfg), params, cfg.temporal).value();
      const auto moved = temporal_mix(gat_layer(Var<float>(permute_axis1(x, perm)), permute_mask(mask, frames, perm),
                                                params.gat, cfg),
                                      params, cfg.temporal)
                             .value();
      dev_geo = std::max(dev_geo, oracle::max_abs_diff(moved, permute_axis1(base, perm)));
    }
    // Entity permutation through fusion variant d (time+entity pooling).
    {
      FusionConfig cfg;
      cfg.pooling = FusionPooling::time_entity;
      cfg.c3 = 6;
      ParamSet<float> ps;
      const auto params = FusionParams<float>::make(ps, CounterRng(500 + trial), cfg, 2, 2, 4);
      randomize_rank1(ps, 600 + trial);
      const int frames = 3, e_n = 4;
      const auto g = oracle::random_tensor<float>({frames, e_n, 4}, 700 + trial);
      const auto v = oracle::random_tensor<float>({frames, e_n, 4}, 800 + trial);
      std::vector<std::uint8_t> presence(static_cast<std::size_t>(frames * e_n), 1);
      presence[static_cast<std::size_t>(trial % (frames * e_n))] = 0;
      const auto perm = random_permutation(e_n, 900 + trial);
      auto run = [&](const Tensor<float>& gg, const Tensor<float>& vv, const std::vector<std::uint8_t>& pr) {
        GeometricEmbedding<float> ge;
        ge.values = Var<float>(gg);
        VisualEmbedding<float> ve;
        ve.values = Var<float>(vv);
        return fuse(ge, ve, pr, params, cfg).values.value();
      };
      const auto base = run(g, v, presence);
      const auto moved = run(permute_axis1(g, perm), permute_axis1(v, perm), permute_mask(presence, frames, perm));
      dev_fusion = std::max(dev_fusion, oracle::max_abs_diff(moved, permute_axis1(base, perm)));
    }
    // Neighbor permutation through the entity graph (entity 0 fixed).
    {
      ParamSet<float> ps;
      const auto params = IegParams<float>::make(ps, CounterRng(1000 + trial), 6);
      const int frames = 2, e_n = 5;
      const auto x = oracle::random_tensor<float>({frames, e_n, 6}, 1100 + trial);
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(frames * e_n), 1);
      mask[static_cast<std::size_t>(1 + trial % (frames * e_n - 1))] = 0;
      const auto perm = random_permutation(e_n, 1200 + trial, 1);
      auto run = [&](const Tensor<float>& xx, const std::vector<std::uint8_t>& m) {
        FusedEntityFeatures<float> f;
        f.values = Var<float>(xx);
        f.entity_mask = m;
        return refine(f, params, IegConfig{}).values.value();
      };
      const auto base = run(x, mask);
      const auto moved = run(permute_axis1(x, perm), permute_mask(mask, frames, perm));
      dev_ieg = std::max(dev_ieg, oracle::max_abs_diff(moved, permute_axis1(base, perm)));
    }
    // Masked entries: absent entity slots and masked keypoints through the whole model.
    {
      ModelConfig mc = micro_model_config(default_config());
      const auto model = Model<float>::make(mc, 1300 + trial);
      PreparedVideo v = micro_video(4, mc.human_slots, mc.object_slots, mc.keypoints, mc.visual_dim,
                                    mc.n_sub_activities, mc.n_affordances, 1400 + trial);
      const int e_n = v.entities(), k_n = mc.keypoints;
      const int absent = trial % e_n;
      for (int t = 0; t < v.frames; ++t) {
        v.presence[static_cast<std::size_t>(t * e_n + absent)] = 0;
        for (int k = 0; k < k_n; ++k) {
          const std::size_t kp = static_cast<std::size_t>((t * e_n + absent) * k_n + k);
          v.geometry.mask[kp] = 0;
          for (int c = 0; c < 4; ++c) v.geometry.values[4 * kp + static_cast<std::size_t>(c)] = 0.0f;
        }
      }
      ForwardOptions fo;
      const auto base = forward(model, v, fo);
      PreparedVideo w = v;
      RngStream r{CounterRng(1500 + trial)};
      for (std::size_t i = 0; i < w.geometry.mask.size(); ++i) {
        if (w.geometry.mask[i]) continue;
        for (int c = 0; c < 4; ++c) w.geometry.values[4 * i + static_cast<std::size_t>(c)] = static_cast<float>(50.0 * r.normal());
      }
      for (int t = 0; t < w.frames; ++t) {
        for (int d = 0; d < mc.visual_dim; ++d) w.visual.at({t, absent, d}) = static_cast<float>(50.0 * r.normal());
      }
      const auto moved = forward(model, w, fo);
      dev_mask = std::max(dev_mask, oracle::max_abs_diff(moved.head.human_logits.value(), base.head.human_logits.value()));
      if (base.head.object_logits.defined()) {
        dev_mask = std::max(dev_mask, oracle::max_abs_diff(moved.head.object_logits.value(), base.head.object_logits.value()));
      }
    }
  }
  const double worst = std::max({dev_geo, dev_fusion, dev_ieg, dev_mask});
  return {worst < 1e-5, "max dev keypoint-perm " + fmt("%.1e", dev_geo) + ", fusion(d) entity-perm " + fmt("%.1e", dev_fusion) +
                            ", IEG neighbor-perm " + fmt("%.1e", dev_ieg) + ", masked entries " + fmt("%.1e", dev_mask)};
}

// ---------------------------------------------------------------------------
// 5. Synthetic overfit on the tiny preset

Json overfit_config() {
  Json cfg = default_config();
  apply_override(cfg, "dataset.preset", "tiny");
  apply_override(cfg, "dataset.train_on", "all");
  apply_override(cfg, "model.c1", "16");
  apply_override(cfg, "model.c2", "32");
  apply_override(cfg, "model.c3", "64");
  apply_override(cfg, "stages.stage1_steps", "1000");
  apply_override(cfg, "stages.stage2_steps", "1000");
  return cfg;
}

Outcome synthetic_overfit() {
  const auto t0 = Clock::now();
  const Json cfg = overfit_config();
  const DataBundle data = load_data(cfg);
  TrainHooks hooks;
  hooks.on_step = [](const StepLog& l) {
    if (l.step % 250 == 0) std::printf("    overfit step %ld  loss %.4f\n", l.step, l.loss), std::fflush(stdout);
  };
  const RunResult r = run_experiment(cfg, data, hooks);
  const double secs = seconds_since(t0);
  g_reports.emplace_back("overfit", r.eval.rows);
  double worst_f1 = 1.0;
  for (const auto& row : r.eval.rows) {
    if (row.task == "joint" && row.k == 0.10) worst_f1 = std::min(worst_f1, row.f1);
  }
  const bool pass = r.train.steps <= 2000 && r.eval.frame_accuracy >= 0.95 && worst_f1 >= 0.90 && secs < 600.0;
  return {pass, std::to_string(data.videos.size()) + " videos, " + std::to_string(r.train.steps) + " steps: frame acc " +
                    fmt("%.1f%%", 100.0 * r.eval.frame_accuracy) + ", min joint F1@10 " + fmt("%.3f", worst_f1) +
                    " (human and object); " + fmt("%.0fs", secs)};
}

// ---------------------------------------------------------------------------
// 6. Ablation ordering on the small preset

Json ablation_config() {
  Json cfg = default_config();
  apply_override(cfg, "dataset.preset", "small");
  apply_override(cfg, "model.c1", "16");
  apply_override(cfg, "model.c2", "32");
  apply_override(cfg, "model.c3", "64");
  apply_override(cfg, "optimizer.lr", "0.001");
  apply_override(cfg, "optimizer.batch", "8");
  apply_override(cfg, "stages.stage1_steps", "150");
  apply_override(cfg, "stages.stage2_steps", "150");
  return cfg;
}

Outcome ablation_ordering(const std::string& table_path) {
  const auto t0 = Clock::now();
  const Json cfg = ablation_config();
  const DataBundle data = load_data(cfg);
  const auto cells = run_study(cfg, data, "ablation", {0, 1, 2}, [](const std::string& line) {
    std::printf("    %s\n", line.c_str());
    std::fflush(stdout);
  });
  for (const auto& c : cells) g_reports.emplace_back("ablation " + c.variant + " seed " + std::to_string(c.seed), c.rows);
  const auto summary = summarize_study(cells);
  std::ostringstream table;
  print_study_table(table, summary);
  std::cout << table.str();
  if (!table_path.empty()) std::ofstream(table_path) << table.str();
  const double secs = seconds_since(t0);
  double full = -1.0;
  for (const auto& s : summary) {
    if (s.variant == "full") full = s.f1_10;
  }
  bool ordered = full >= 0.0;
  std::string worst;
  double worst_gap = 1.0;
  for (const auto& s : summary) {
    if (s.variant == "full") continue;
    const double gap = full - s.f1_10;
    if (gap < worst_gap) {
      worst_gap = gap;
      worst = s.variant;
    }
    ordered = ordered && gap >= -0.01;
  }
  return {ordered && secs < 7200.0, "full F1@10 " + fmt("%.1f", 100.0 * full) + ", smallest margin " +
                                        fmt("%+.1f", 100.0 * worst_gap) + " vs " + worst + " (ties within 1 point allowed); " +
                                        fmt("%.0fs", secs)};
}

// ---------------------------------------------------------------------------
// 7. Fold protocol

Outcome fold_protocol() {
  auto disjoint = [](const io::DatasetManifest& m, const io::Fold& f) {
    std::set<std::string> train_subjects;
    for (const auto& id : f.train) {
      for (const auto& s : m.video(id).subject_ids) train_subjects.insert(s);
    }
    for (const auto& id : f.test) {
      for (const auto& s : m.video(id).subject_ids) {
        if (train_subjects.count(s)) return false;
      }
    }
    return true;
  };
  std::string detail;
  for (const char* preset : {"tiny", "small"}) {
    Json cfg = default_config();
    apply_override(cfg, "dataset.preset", preset);
    const DataBundle data = load_data(cfg);
    const auto& m = data.manifest;
    for (auto protocol : {io::Protocol::leave_one_subject_out, io::Protocol::leave_two_subjects_out,
                          io::Protocol::fixed_test_subjects}) {
      std::vector<std::string> test_subjects;
      if (protocol == io::Protocol::fixed_test_subjects) {
        test_subjects = cfg["dataset"]["test_subjects"].get<std::vector<std::string>>();
        if (test_subjects.empty()) test_subjects = data.folds.at(0).test.empty() ? std::vector<std::string>{} : m.video(data.folds[0].test[0]).subject_ids;
      }
      const auto folds = io::make_folds(m, protocol, test_subjects);
      for (const auto& f : folds) {
        if (!disjoint(m, f)) return {false, std::string(preset) + " " + io::to_string(protocol) + " fold " + f.name + " leaks a subject"};
      }
      detail += std::string(preset) + "/" + io::to_string(protocol) + " " + std::to_string(folds.size()) + " folds; ";
    }
  }
  // Four participants, one video each plus a repeat: leave-one-subject-out gives exactly 4 folds.
  io::DatasetManifest four;
  four.subjects = {"p1", "p2", "p3", "p4"};
  for (int i = 0; i < 8; ++i) four.videos.push_back({"v" + std::to_string(i), {four.subjects[static_cast<std::size_t>(i % 4)]}, "act", ""});
  const auto loso = io::make_folds(four, io::Protocol::leave_one_subject_out);
  bool ok = loso.size() == 4;
  for (const auto& f : loso) ok = ok && disjoint(four, f) && f.test.size() == 2;
  detail += "4-subject LOSO " + std::to_string(loso.size()) + " folds";
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 8. Monotonicity of every emitted report

Outcome monotonicity() {
  // Random predictors add reports that no trained model produced.
  RngStream rng(CounterRng(8).fork("acceptance-monotone"));
  for (int i = 0; i < 50; ++i) {
    std::vector<EntityTimelines> ents;
    for (int e = 0; e < 6; ++e) {
      EntityTimelines et;
      et.video_id = "v" + std::to_string(e);
      et.kind = e % 2 ? "object" : "human";
      const auto gt = oracle::random_timeline(rng, 60, 8, 4);
      et.labels = oracle::to_frames(gt);
      et.frame_pred = oracle::to_frames(oracle::random_timeline(rng, 60, 12, 4));
      ents.push_back(std::move(et));
    }
    auto rows = score_entities(ents, "random", Task::joint, "f0");
    const auto ks = score_entities(ents, "random", Task::known_segmentation, "f0");
    rows.insert(rows.end(), ks.begin(), ks.end());
    g_reports.emplace_back("random predictor " + std::to_string(i), rows);
  }
  for (const auto& [name, rows] : g_reports) {
    if (!report_is_monotone(rows) || !report_is_monotone(aggregate_rows(rows))) return {false, "report '" + name + "' is not monotone"};
  }
  return {true, std::to_string(g_reports.size()) + " reports satisfy F1@10 >= F1@25 >= F1@50"};
}

// ---------------------------------------------------------------------------
// 9. Determinism

std::string checkpoint_bytes(const Checkpoint& c, const std::string& tag) {
  const auto path = std::filesystem::temp_directory_path() / ("gvhoi_acceptance_" + tag + ".ckpt");
  save_checkpoint(path, c);
  std::ifstream in(path, std::ios::binary);
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::filesystem::remove(path);
  return bytes;
}

Outcome determinism() {
  Json cfg = default_config();
  apply_override(cfg, "model.c1", "8");
  apply_override(cfg, "model.c2", "16");
  apply_override(cfg, "model.c3", "32");
  apply_override(cfg, "dataset.subsample", "4");
  apply_override(cfg, "stages.stage1_steps", "20");
  apply_override(cfg, "stages.stage2_steps", "20");
  apply_override(cfg, "optimizer.lr", "0.001");
  apply_override(cfg, "seed", "11");
  std::string ckpt[2], report[2];
  for (int run = 0; run < 2; ++run) {
    const DataBundle data = load_data(cfg);
    const RunResult r = run_experiment(cfg, data);
    ckpt[run] = checkpoint_bytes(r.checkpoint, std::to_string(run));
    std::ostringstream os;
    write_report_csv(os, F1Report{{r.checkpoint.config_hash, 11, kCodeVersion}, r.eval.rows});
    report[run] = os.str();
    g_reports.emplace_back("determinism run " + std::to_string(run), r.eval.rows);
  }
  const bool pass = !ckpt[0].empty() && ckpt[0] == ckpt[1] && report[0] == report[1];
  return {pass, "checkpoints " + std::string(ckpt[0] == ckpt[1] ? "identical" : "DIFFER") + " (" +
                    std::to_string(ckpt[0].size()) + " bytes), reports " + (report[0] == report[1] ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string table_path = "ablation_table.txt";
  app.add_option("--only", only, "Run only these criteria (comma separated)")->delimiter(',');
  app.add_option("--ablation-table", table_path, "Where to write the ablation table")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Criterion 8 inspects the reports of the others, so it runs last.
  const std::vector<Criterion> criteria{
      {1, "metric oracle", metric_oracle},
      {2, "gradient suite", gradient_suite},
      {3, "attention invariants", attention_invariants},
      {4, "equivariance and masking", equivariance_and_masking},
      {7, "fold protocol", fold_protocol},
      {9, "determinism", determinism},
      {5, "synthetic overfit", synthetic_overfit},
      {6, "ablation ordering", [&] { return ablation_ordering(table_path); }},
      {8, "monotonicity", monotonicity},
  };
  std::map<int, std::string> lines;
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    std::printf("running criterion %d (%s)\n", c.id, c.name);
    std::fflush(stdout);
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "criterion %d %-26s %s  ", c.id, c.name, o.pass ? "PASS" : "FAIL");
    lines[c.id] = buf + o.detail;
    std::printf("%s\n", lines[c.id].c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  std::printf("\nsummary\n");
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  return all ? 0 : 1;
}
