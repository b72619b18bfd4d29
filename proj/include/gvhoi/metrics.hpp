#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "gvhoi/data_model.hpp"

namespace gvhoi {

inline constexpr std::array<double, 3> kOverlapThresholds{0.10, 0.25, 0.50};

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

F1Score score(const MatchCounts& c);

// Frame-count IoU of two segments.
double segment_iou(const Segment& a, const Segment& b);

// Greedy matching in predicted-segment order (each prediction takes its
// max-IoU same-class ground truth, first index on ties; TP only if that
// ground truth is still unmatched and IoU >= k).
MatchCounts f1_at_k(const SegmentTimeline& pred, const SegmentTimeline& gt, double k);

// Maximum-cardinality matching over same-class pairs with IoU >= k.
MatchCounts f1_at_k_optimal(const SegmentTimeline& pred, const SegmentTimeline& gt, double k);

struct FoldSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single fold
};

FoldSummary aggregate_folds(const std::vector<double>& per_fold);

// "65.1 ± 5.2" from fractions in [0, 1].
std::string format_percent(const FoldSummary& s);

enum class Task { joint, known_segmentation };
std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct ReportRow {
  std::string dataset;
  std::string task;
  std::string kind;  // "human" or "object"
  double k = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::string fold;  // fold name or "aggregate"

  bool operator==(const ReportRow&) const = default;
};

struct ReportProvenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string code_version;
};

struct F1Report {
  ReportProvenance provenance;
  std::vector<ReportRow> rows;
};

// Per-video predictions and ground truth of one entity slot.
struct EntityTimelines {
  std::string video_id;
  std::string kind;
  std::vector<int> frame_pred;   // [T], -1 where not predicted
  std::vector<int> labels;       // [T], -1 where unlabeled
};

// Counts per kind and threshold over all labelled entities, for the chosen task.
// Joint: predicted segments from frame-wise predictions over labelled frames.
// Known segmentation: ground-truth segments relabelled by majority vote.
std::vector<ReportRow> score_entities(const std::vector<EntityTimelines>& entities, const std::string& dataset,
                                      Task task, const std::string& fold);

// Rejects missing predictions: every id in test_ids must appear in entities.
void require_coverage(const std::vector<EntityTimelines>& entities, const std::vector<std::string>& test_ids);

// Appends aggregate rows (mean F1 over folds, summed counts) for each
// (task, kind, k) present in rows.
std::vector<ReportRow> aggregate_rows(const std::vector<ReportRow>& rows);

void write_report_csv(std::ostream& os, const F1Report& report);
F1Report read_report_csv(std::istream& is);

// Human-readable table: one line per (task, kind) with F1@{10,25,50}.
void print_report_table(std::ostream& os, const std::vector<ReportRow>& rows);

// True when F1@10 >= F1@25 >= F1@50 for every (task, kind, fold) group.
bool report_is_monotone(const std::vector<ReportRow>& rows);

double frame_accuracy(const std::vector<EntityTimelines>& entities);

}  // namespace gvhoi
