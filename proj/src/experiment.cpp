#include "gvhoi/experiment.hpp"

#include <cstdio>
#include <map>
#include <ostream>

#include "gvhoi/version.hpp"

namespace gvhoi {

Evaluation evaluate(const Model<float>& model, const std::vector<PreparedVideo>& videos, double tau,
                    const std::string& dataset, const std::string& fold) {
  Evaluation ev;
  ev.predictions = predict(model, videos, tau);
  ev.timelines = entity_timelines(videos, ev.predictions);
  for (Task task : {Task::joint, Task::known_segmentation}) {
    const auto rows = score_entities(ev.timelines, dataset, task, fold);
    ev.rows.insert(ev.rows.end(), rows.begin(), rows.end());
  }
  ev.frame_accuracy = frame_accuracy(ev.timelines);
  return ev;
}

RunResult run_experiment(const Json& cfg, const DataBundle& data, const TrainHooks& hooks) {
  RunResult r;
  r.tag = variant_tag(cfg);
  const DataShape shape = data_shape(data, cfg);
  const auto [train_ids, test_ids] = select_split(data, cfg);
  const auto train_videos = prepare_videos(data, train_ids, shape);
  const auto test_videos = prepare_videos(data, test_ids, shape);
  const TrainConfig tc = train_config(cfg);
  Model<float> model = Model<float>::make(model_config(cfg, shape), tc.seed);
  r.train = train(model, train_videos, tc, hooks);
  Json meta{{"seed", tc.seed}, {"stage", 2}, {"step", r.train.steps}, {"tau", r.train.final_tau}, {"tag", r.tag}};
  r.checkpoint = make_checkpoint(model, cfg, shape, meta);
  const std::string fold = cfg.at("dataset").at("train_on").get<std::string>() == "all"
                               ? "all"
                               : data.folds[static_cast<std::size_t>(cfg.at("dataset").at("fold").get<int>())].name;
  r.eval = evaluate(model, test_videos, r.train.final_tau, data.manifest.name, fold);
  return r;
}

std::vector<StudyVariant> study_variants(const std::string& study, const DataBundle& data) {
  if (study == "ablation") {
    return {{"full", {}},
            {"-IEG", {{"use_ieg", "false"}}},
            {"-CAF-IEG", {{"use_caf", "false"}, {"use_ieg", "false"}}},
            {"GCN-CAF-IEG", {{"use_gat", "false"}, {"use_caf", "false"}, {"use_ieg", "false"}}}};
  }
  if (study == "fusion") {
    std::vector<StudyVariant> v;
    for (const char* f : {"a", "b", "c", "d"}) v.push_back({std::string("fusion ") + f, {{"fusion.variant", f}}});
    return v;
  }
  if (study == "objects") {
    int max_objects = 0;
    for (const auto& v : data.videos) max_objects = std::max(max_objects, v.objects());
    std::vector<StudyVariant> v;
    for (int cap = 0; cap <= max_objects; ++cap) {
      v.push_back({std::to_string(cap) + " objects", {{"object_count_cap", std::to_string(cap)}}});
    }
    return v;
  }
  throw ConfigError("unknown study '" + study + "' (expected ablation, fusion or objects)");
}

std::vector<StudyCell> run_study(const Json& base, const DataBundle& data, const std::string& study,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::function<void(const std::string&)>& progress) {
  std::vector<StudyCell> cells;
  for (const auto& variant : study_variants(study, data)) {
    for (std::uint64_t seed : seeds) {
      Json cfg = base;
      for (const auto& [k, v] : variant.overrides) apply_override(cfg, k, v);
      cfg["seed"] = seed;
      const RunResult r = run_experiment(cfg, data);
      cells.push_back({variant.name, seed, r.eval.rows});
      if (progress) {
        char buf[160];
        double f1 = 0.0;
        for (const auto& row : r.eval.rows) {
          if (row.task == "joint" && row.kind == "human" && row.k == 0.10) f1 = row.f1;
        }
        std::snprintf(buf, sizeof buf, "%-14s seed %llu  human joint F1@10 %.1f  frame acc %.1f%%", variant.name.c_str(),
                      static_cast<unsigned long long>(seed), 100.0 * f1, 100.0 * r.eval.frame_accuracy);
        progress(buf);
      }
    }
  }
  return cells;
}

std::vector<StudySummaryRow> summarize_study(const std::vector<StudyCell>& cells) {
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::vector<double>>> f1;
  for (const auto& c : cells) {
    if (!f1.count(c.variant)) order.push_back(c.variant);
    auto& byk = f1[c.variant];
    for (const auto& r : c.rows) {
      if (r.task == "joint" && r.kind == "human") byk[r.k].push_back(r.f1);
    }
  }
  std::vector<StudySummaryRow> out;
  for (const auto& v : order) {
    auto& byk = f1[v];
    StudySummaryRow row;
    row.variant = v;
    row.f1_10 = aggregate_folds(byk[0.10]).mean;
    row.std_10 = aggregate_folds(byk[0.10]).std;
    row.f1_25 = aggregate_folds(byk[0.25]).mean;
    row.f1_50 = aggregate_folds(byk[0.50]).mean;
    out.push_back(row);
  }
  return out;
}

void print_study_table(std::ostream& os, const std::vector<StudySummaryRow>& rows) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %-14s %-8s %s\n", "variant", "F1@10", "F1@25", "F1@50");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %-15s %-8.1f %.1f\n", r.variant.c_str(),
                  format_percent({r.f1_10, r.std_10}).c_str(), 100.0 * r.f1_25, 100.0 * r.f1_50);
    os << buf;
  }
}

}  // namespace gvhoi
