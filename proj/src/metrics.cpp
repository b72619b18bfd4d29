#include "gvhoi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "gvhoi/core/error.hpp"
#include "gvhoi/temporal_head.hpp"

namespace gvhoi {

F1Score score(const MatchCounts& c) {
  F1Score s;
  s.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double segment_iou(const Segment& a, const Segment& b) {
  const int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
  if (inter <= 0) return 0.0;
  const int uni = a.length() + b.length() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchCounts f1_at_k(const SegmentTimeline& pred, const SegmentTimeline& gt, double k) {
  if (!(k > 0.0 && k <= 1.0)) throw ConfigError("overlap threshold must be in (0, 1]");
  MatchCounts c;
  std::vector<char> used(gt.size(), 0);
  for (const auto& p : pred) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (gt[j].label != p.label) continue;
      const double iou = segment_iou(p, gt[j]);
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0 && best_iou >= k && !used[static_cast<std::size_t>(best)]) {
      used[static_cast<std::size_t>(best)] = 1;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<long>(std::count(used.begin(), used.end(), 0));
  return c;
}

MatchCounts f1_at_k_optimal(const SegmentTimeline& pred, const SegmentTimeline& gt, double k) {
  if (!(k > 0.0 && k <= 1.0)) throw ConfigError("overlap threshold must be in (0, 1]");
  std::vector<std::vector<int>> adj(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (pred[i].label == gt[j].label && segment_iou(pred[i], gt[j]) >= k) adj[i].push_back(static_cast<int>(j));
    }
  }
  // Kuhn's augmenting paths.
  std::vector<int> owner(gt.size(), -1);
  std::vector<char> seen;
  auto augment = [&](auto&& self, int i) -> bool {
    for (int j : adj[static_cast<std::size_t>(i)]) {
      if (seen[static_cast<std::size_t>(j)]) continue;
      seen[static_cast<std::size_t>(j)] = 1;
      if (owner[static_cast<std::size_t>(j)] < 0 || self(self, owner[static_cast<std::size_t>(j)])) {
        owner[static_cast<std::size_t>(j)] = i;
        return true;
      }
    }
    return false;
  };
  long matched = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    seen.assign(gt.size(), 0);
    if (augment(augment, static_cast<int>(i))) ++matched;
  }
  return {matched, static_cast<long>(pred.size()) - matched, static_cast<long>(gt.size()) - matched};
}

FoldSummary aggregate_folds(const std::vector<double>& per_fold) {
  if (per_fold.empty()) throw ConfigError("aggregate_folds: no folds");
  FoldSummary s;
  for (double v : per_fold) s.mean += v;
  s.mean /= static_cast<double>(per_fold.size());
  if (per_fold.size() > 1) {
    double ss = 0.0;
    for (double v : per_fold) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(per_fold.size() - 1));
  }
  return s;
}

std::string format_percent(const FoldSummary& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100.0 * s.mean, 100.0 * s.std);
  return buf;
}

std::string to_string(Task t) { return t == Task::joint ? "joint" : "known_segmentation"; }

Task task_from_string(const std::string& s) {
  if (s == "joint") return Task::joint;
  if (s == "known_segmentation" || s == "known-segmentation") return Task::known_segmentation;
  throw ConfigError("unknown task '" + s + "' (expected joint or known_segmentation)");
}

std::vector<ReportRow> score_entities(const std::vector<EntityTimelines>& entities, const std::string& dataset,
                                      Task task, const std::string& fold) {
  std::map<std::string, std::array<MatchCounts, kOverlapThresholds.size()>> per_kind;
  for (const auto& e : entities) {
    if (e.frame_pred.size() != e.labels.size()) {
      throw ShapeError("score_entities: prediction length differs from labels for video '" + e.video_id + "'");
    }
    std::vector<std::uint8_t> mask(e.labels.size());
    for (std::size_t t = 0; t < mask.size(); ++t) mask[t] = e.labels[t] >= 0;
    const SegmentTimeline gt = extract_segments(e.labels, mask);
    if (gt.empty()) continue;
    SegmentTimeline pred;
    if (task == Task::joint) {
      std::vector<int> p = e.frame_pred;
      std::vector<std::uint8_t> pmask(mask);
      for (std::size_t t = 0; t < p.size(); ++t) pmask[t] = pmask[t] && p[t] >= 0;
      pred = extract_segments(p, pmask);
    } else {
      pred = predict_known_segments(e.frame_pred, gt);
    }
    auto& counts = per_kind[e.kind];
    for (std::size_t i = 0; i < kOverlapThresholds.size(); ++i) counts[i] += f1_at_k(pred, gt, kOverlapThresholds[i]);
  }
  std::vector<ReportRow> rows;
  for (const auto& [kind, counts] : per_kind) {
    for (std::size_t i = 0; i < kOverlapThresholds.size(); ++i) {
      const F1Score s = score(counts[i]);
      rows.push_back({dataset, to_string(task), kind, kOverlapThresholds[i], s.precision, s.recall, s.f1,
                      counts[i].tp, counts[i].fp, counts[i].fn, fold});
    }
  }
  return rows;
}

void require_coverage(const std::vector<EntityTimelines>& entities, const std::vector<std::string>& test_ids) {
  for (const auto& id : test_ids) {
    const bool found = std::any_of(entities.begin(), entities.end(), [&](const auto& e) { return e.video_id == id; });
    if (!found) throw DataError("missing prediction for test video '" + id + "'");
  }
}

std::vector<ReportRow> aggregate_rows(const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, double>;
  std::map<Key, std::vector<const ReportRow*>> groups;
  std::vector<Key> order;
  for (const auto& r : rows) {
    if (r.fold == "aggregate") continue;
    Key key{r.dataset, r.task, r.kind, r.k};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<ReportRow> out = rows;
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> f1, p, rc;
    ReportRow agg{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), 0, 0, 0, 0, 0, 0,
                  "aggregate"};
    for (const auto* r : g) {
      f1.push_back(r->f1);
      p.push_back(r->precision);
      rc.push_back(r->recall);
      agg.tp += r->tp;
      agg.fp += r->fp;
      agg.fn += r->fn;
    }
    agg.f1 = aggregate_folds(f1).mean;
    agg.precision = aggregate_folds(p).mean;
    agg.recall = aggregate_folds(rc).mean;
    out.push_back(agg);
  }
  return out;
}

void write_report_csv(std::ostream& os, const F1Report& report) {
  os << "# config_hash=" << report.provenance.config_hash << "\n";
  os << "# seed=" << report.provenance.seed << "\n";
  os << "# code_version=" << report.provenance.code_version << "\n";
  os << "dataset,task,kind,k,precision,recall,f1,tp,fp,fn,fold\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.2f,%.17g,%.17g,%.17g,%ld,%ld,%ld", r.k, r.precision, r.recall, r.f1, r.tp, r.fp,
                  r.fn);
    os << r.dataset << ',' << r.task << ',' << r.kind << ',' << buf << ',' << r.fold << '\n';
  }
}

F1Report read_report_csv(std::istream& is) {
  F1Report rep;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "config_hash") rep.provenance.config_hash = val;
      else if (key == "seed") rep.provenance.seed = std::stoull(val);
      else if (key == "code_version") rep.provenance.code_version = val;
      continue;
    }
    if (!header) {
      if (line != "dataset,task,kind,k,precision,recall,f1,tp,fp,fn,fold") throw DataError("report CSV: bad header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw DataError("report CSV: expected 11 columns in '" + line + "'");
    rep.rows.push_back({f[0], f[1], f[2], std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                        std::stol(f[7]), std::stol(f[8]), std::stol(f[9]), f[10]});
  }
  if (!header) throw DataError("report CSV: missing header");
  return rep;
}

void print_report_table(std::ostream& os, const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::map<double, std::vector<double>>> table;
  std::vector<Key> order;
  for (const auto& r : rows) {
    if (r.fold == "aggregate") continue;
    Key key{r.task, r.kind, r.dataset};
    if (!table.count(key)) order.push_back(key);
    table[key][r.k].push_back(r.f1);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %-8s %-16s %-16s %s\n", "task", "kind", "F1@10", "F1@25", "F1@50");
  os << buf;
  for (const auto& key : order) {
    auto& byk = table[key];
    // "±" takes two bytes, hence the wider byte field for the same visible width.
    std::snprintf(buf, sizeof buf, "%-20s %-8s %-17s %-17s %-17s\n", std::get<0>(key).c_str(), std::get<1>(key).c_str(),
                  format_percent(aggregate_folds(byk[0.10])).c_str(), format_percent(aggregate_folds(byk[0.25])).c_str(),
                  format_percent(aggregate_folds(byk[0.50])).c_str());
    os << buf;
  }
}

bool report_is_monotone(const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, std::map<double, double>> groups;
  for (const auto& r : rows) groups[{r.dataset, r.task, r.kind, r.fold}][r.k] = r.f1;
  for (const auto& [key, byk] : groups) {
    double prev = 2.0;
    for (const auto& [k, f1] : byk) {
      if (f1 > prev) return false;
      prev = f1;
    }
  }
  return true;
}

double frame_accuracy(const std::vector<EntityTimelines>& entities) {
  long correct = 0, total = 0;
  for (const auto& e : entities) {
    for (std::size_t t = 0; t < e.labels.size(); ++t) {
      if (e.labels[t] < 0) continue;
      ++total;
      correct += e.frame_pred[t] == e.labels[t];
    }
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace gvhoi
