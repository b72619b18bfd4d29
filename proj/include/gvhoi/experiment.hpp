#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gvhoi/training.hpp"

namespace gvhoi {

struct Evaluation {
  std::vector<ReportRow> rows;  // both tasks, every labelled kind
  std::vector<VideoPrediction> predictions;
  std::vector<EntityTimelines> timelines;
  double frame_accuracy = 0.0;
};

Evaluation evaluate(const Model<float>& model, const std::vector<PreparedVideo>& videos, double tau,
                    const std::string& dataset, const std::string& fold);

struct RunResult {
  TrainResult train;
  Checkpoint checkpoint;
  Evaluation eval;
  std::string tag;
};

// Trains on the configured split and evaluates on its test videos.
RunResult run_experiment(const Json& cfg, const DataBundle& data, const TrainHooks& hooks = {});

struct StudyVariant {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// "ablation": full, -IEG, -CAF-IEG, GCN-CAF-IEG. "fusion": variants a-d.
// "objects": object_count_cap from 0 up to the dataset maximum.
std::vector<StudyVariant> study_variants(const std::string& study, const DataBundle& data);

struct StudyCell {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
};

struct StudySummaryRow {
  std::string variant;
  double f1_10 = 0.0, f1_25 = 0.0, f1_50 = 0.0;  // mean over seeds (joint task, human kind)
  double std_10 = 0.0;
};

std::vector<StudyCell> run_study(const Json& base, const DataBundle& data, const std::string& study,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::function<void(const std::string&)>& progress = {});

std::vector<StudySummaryRow> summarize_study(const std::vector<StudyCell>& cells);
void print_study_table(std::ostream& os, const std::vector<StudySummaryRow>& rows);

}  // namespace gvhoi
