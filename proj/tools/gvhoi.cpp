#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gvhoi/experiment.hpp"
#include "gvhoi/gradcheck.hpp"
#include "gvhoi/timeline_svg.hpp"
#include "gvhoi/version.hpp"

namespace fs = std::filesystem;
using namespace gvhoi;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCheck = 4;

// Dotted overrides left over after CLI11 parsing: --a.b=v or --a.b v.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& rest) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& arg = rest[i];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < rest.size()) {
      out.emplace_back(body, rest[++i]);
    } else {
      throw ConfigError("override --" + body + " has no value");
    }
  }
  return out;
}

Json build_config(const std::string& config_file, const std::vector<std::string>& rest,
                  const Json& base = default_config()) {
  Json cfg = base;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw ConfigError("cannot open config file " + config_file);
    Json patch;
    try {
      patch = Json::parse(in);
    } catch (const Json::exception& e) {
      throw ConfigError(config_file + ": " + e.what());
    }
    merge_config(cfg, patch);
  }
  for (const auto& [k, v] : parse_overrides(rest)) apply_override(cfg, k, v);
  return cfg;
}

std::string provenance_line(const std::string& hash, std::uint64_t seed) {
  return "config_hash=" + hash + " seed=" + std::to_string(seed) + " code_version=" + kCodeVersion;
}

void write_provenance_comments(std::ostream& os, const std::string& hash, std::uint64_t seed) {
  os << "# config_hash=" << hash << "\n# seed=" << seed << "\n# code_version=" << kCodeVersion << "\n";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw DataError("cannot write " + p.string());
  return os;
}

// Exclusive run-directory lock, removed on scope exit.
class RunLock {
 public:
  explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) throw ConfigError("run directory " + dir.string() + " is locked by another process (" + path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd, pid.data(), pid.size()) < 0) {
      // The lock still holds without the pid.
    }
    ::close(fd);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

bool dir_nonempty(const fs::path& p) { return fs::exists(p) && fs::is_directory(p) && !fs::is_empty(p); }

// ---------------------------------------------------------------- synth

void print_dataset_summary(std::ostream& os, const DataBundle& data) {
  int humans = 0, objects = 0, frames = 0;
  std::map<std::string, std::vector<long>> hist;
  for (const auto& [kind, names] : data.manifest.label_spaces) hist[kind].assign(names.size(), 0);
  for (const auto& v : data.videos) {
    humans += v.humans();
    objects += v.objects();
    frames += v.frames;
    for (const auto& e : v.entities) {
      auto& h = hist[to_string(e.kind)];
      for (std::size_t t = 0; t < e.labels.size(); ++t) {
        if (e.label_mask[t] && e.labels[t] >= 0 && e.labels[t] < static_cast<int>(h.size())) ++h[static_cast<std::size_t>(e.labels[t])];
      }
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %7s %9s %7s %8s %11s %8s\n", "dataset", "videos", "subjects", "humans",
                "objects", "sub-acts", "affords");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-12s %7zu %9zu %7d %8d %11zu %8zu\n", data.manifest.name.c_str(), data.videos.size(),
                data.manifest.subjects.size(), humans, objects, data.manifest.label_spaces.at("human").size(),
                data.manifest.label_spaces.count("object") ? data.manifest.label_spaces.at("object").size() : 0);
  os << buf << "frames: " << frames << " total\n";
  for (const auto& [kind, names] : data.manifest.label_spaces) {
    os << kind << " frame histogram:";
    for (std::size_t c = 0; c < names.size(); ++c) os << " " << names[c] << "=" << hist[kind][c];
    os << "\n";
  }
}

int cmd_synth(const std::string& preset, std::uint64_t seed, int visual_dim, const fs::path& out, bool force) {
  if (dir_nonempty(out) && !force) throw ConfigError("output directory " + out.string() + " is not empty (use --force)");
  const auto bench = synth::make_benchmark(synth::preset_from_string(preset), seed, visual_dim);
  DataBundle data = bundle_from_synthetic(bench);
  const Json desc{{"preset", preset}, {"seed", seed}, {"visual_dim", visual_dim}};
  std::string tests;
  for (const auto& s : bench.test_subjects) tests += (tests.empty() ? "" : ",") + s;
  data.manifest.provenance = {{"config_hash", config_hash(desc)},
                              {"seed", std::to_string(seed)},
                              {"code_version", kCodeVersion},
                              {"generator", "synthetic preset " + preset},
                              {"test_subjects", tests}};
  if (force && fs::exists(out)) fs::remove_all(out);
  io::write_dataset(out, data.manifest, data.videos);
  print_dataset_summary(std::cout, data);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval helpers

std::vector<std::string> class_names(const DataBundle& data, const std::string& kind) {
  const auto it = data.manifest.label_spaces.find(kind);
  return it == data.manifest.label_spaces.end() ? std::vector<std::string>{} : it->second;
}

void write_timelines(const fs::path& dir, const DataBundle& data, const std::vector<PreparedVideo>& videos,
                     const std::vector<VideoPrediction>& preds, const std::string& provenance) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const auto& v = videos[i];
    std::vector<TimelineRow> rows;
    const int entities = v.human_slots + v.object_slots;
    for (int e = 0; e < entities; ++e) {
      if (v.slot_ids[static_cast<std::size_t>(e)].empty()) continue;
      TimelineRow gt{v.slot_ids[static_cast<std::size_t>(e)] + " GT", {}};
      TimelineRow pr{v.slot_ids[static_cast<std::size_t>(e)] + " pred", {}};
      for (int t = 0; t < v.frames; ++t) {
        const std::size_t idx = static_cast<std::size_t>(t) * entities + e;
        gt.frames.push_back(v.labels[idx]);
        pr.frames.push_back(v.labels[idx] >= 0 ? preds[i].frame_pred[idx] : -1);
      }
      rows.push_back(std::move(gt));
      rows.push_back(std::move(pr));
    }
    // Humans and objects share the plot; classes are listed per kind.
    std::vector<std::string> legend;
    for (const auto& n : class_names(data, "human")) legend.push_back(n);
    if (v.object_slots > 0) {
      const auto obj = class_names(data, "object");
      for (std::size_t c = 0; c < obj.size(); ++c) {
        if (c < legend.size()) legend[c] += "/" + obj[c];
        else legend.push_back(obj[c]);
      }
    }
    auto os = open_out(dir / (v.video_id + ".svg"));
    write_timeline_svg(os, v.video_id, rows, legend, provenance);
  }
}

void write_attention(const fs::path& dir, const std::vector<PreparedVideo>& videos,
                     const std::vector<VideoPrediction>& preds, const std::string& hash, std::uint64_t seed) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < videos.size(); ++i) {
    if (preds[i].neighbor_attn.numel() == 0) continue;
    auto os = open_out(dir / (videos[i].video_id + "_neighbors.csv"));
    write_provenance_comments(os, hash, seed);
    write_neighbor_attn_csv(os, preds[i].neighbor_attn, videos[i].presence);
  }
}

// ---------------------------------------------------------------- train

int cmd_train(const fs::path& out, const std::string& config_file, const std::vector<std::string>& rest,
              long validate_every) {
  const Json cfg = build_config(config_file, rest);
  const std::string hash = config_hash(cfg);
  const TrainConfig tc = train_config(cfg);
  fs::create_directories(out);
  RunLock lock(out);

  const DataBundle data = load_data(cfg);
  const DataShape shape = data_shape(data, cfg);
  const auto [train_ids, test_ids] = select_split(data, cfg);
  const auto train_videos = prepare_videos(data, train_ids, shape);
  const auto val_videos = prepare_videos(data, test_ids, shape);
  std::cout << "variant " << variant_tag(cfg) << "  config " << hash << "  seed " << tc.seed << "\n";
  std::cout << "train videos " << train_ids.size() << "  validation videos " << test_ids.size() << "\n";
  {
    auto os = open_out(out / "config.json");
    os << cfg.dump(2) << "\n";
  }

  Model<float> model = Model<float>::make(model_config(cfg, shape), tc.seed);
  auto log = open_out(out / "train_log.csv");
  write_provenance_comments(log, hash, tc.seed);
  log << "step,stage,loss,human_loss,object_loss,tau\n";
  auto val = open_out(out / "val_log.csv");
  write_provenance_comments(val, hash, tc.seed);
  val << "step,stage,kind,k,f1\n";

  double tau = 1.0;
  TrainHooks hooks;
  hooks.validate_every = validate_every;
  hooks.on_step = [&](const StepLog& s) {
    tau = s.tau;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%ld,%d,%.9g,%.9g,%.9g,%.9g\n", s.step, s.stage, s.loss, s.human_loss,
                  s.object_loss, s.tau);
    log << buf;
    if (tc.log_every > 0 && s.step % tc.log_every == 0) {
      std::printf("step %6ld  stage %d  loss %.5f  tau %.3f\n", s.step, s.stage, s.loss, s.tau);
      std::fflush(stdout);
    }
  };
  hooks.on_validate = [&](long step, int stage) {
    if (stage == 1 && step == tc.stage1_steps) {
      save_checkpoint(out / "stage1.ckpt",
                      make_checkpoint(model, cfg, shape, {{"seed", tc.seed}, {"stage", 1}, {"step", step}, {"tau", tau}}));
    }
    if (val_videos.empty()) return;
    const Evaluation ev = evaluate(model, val_videos, tau, data.manifest.name, "validation");
    std::printf("validate step %ld:", step);
    for (const auto& r : ev.rows) {
      if (r.task != "joint") continue;
      val << step << "," << stage << "," << r.kind << "," << r.k << "," << r.f1 << "\n";
      std::printf("  %s F1@%d %.1f", r.kind.c_str(), static_cast<int>(std::lround(100 * r.k)), 100.0 * r.f1);
    }
    std::printf("  frame acc %.1f%%\n", 100.0 * ev.frame_accuracy);
  };
  const TrainResult result = train(model, train_videos, tc, hooks);
  save_checkpoint(out / "final.ckpt",
                  make_checkpoint(model, cfg, shape,
                                  {{"seed", tc.seed}, {"stage", 2}, {"step", result.steps}, {"tau", result.final_tau},
                                   {"tag", variant_tag(cfg)}}));
  std::cout << "wrote " << (out / "final.ckpt").string() << " after " << result.steps << " steps\n";
  return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const fs::path& ckpt_path, const fs::path& out, const std::string& task, const std::string& config_file,
             const std::vector<std::string>& rest, bool force) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Json cfg = ckpt.config;
  if (!config_file.empty() || !rest.empty()) {
    // Overrides patch the checkpoint's own config, so unchanged keys keep their trained values.
    const Json requested = build_config(config_file, rest, ckpt.config);
    if (config_hash(requested) != ckpt.config_hash) {
      if (!force) {
        throw ConfigError("config hash " + config_hash(requested) + " does not match checkpoint " + ckpt.config_hash +
                          " (use --force to evaluate anyway)");
      }
      std::cerr << "warning: config hash mismatch ignored (--force)\n";
      cfg = requested;
    }
  }
  if (config_hash(ckpt.config) != ckpt.config_hash && !force) {
    throw ConfigError("checkpoint config hash " + ckpt.config_hash + " does not match its stored config");
  }
  const std::string hash = ckpt.config_hash;
  const std::uint64_t seed = ckpt.meta.value("seed", std::uint64_t{0});
  const double tau = ckpt.meta.value("tau", 1.0);

  const DataBundle data = load_data(cfg);
  const DataShape shape = data_shape(data, cfg);
  const DataShape saved = checkpoint_shape(ckpt);
  if (shape.keypoints != saved.keypoints || shape.visual_dim != saved.visual_dim ||
      shape.human_slots != saved.human_slots || shape.object_slots != saved.object_slots ||
      shape.n_sub_activities != saved.n_sub_activities || shape.n_affordances != saved.n_affordances) {
    throw DataError("dataset shape does not match the checkpoint's training data");
  }
  const Model<float> model = restore_model(ckpt);
  const auto [train_ids, test_ids] = select_split(data, cfg);
  const auto videos = prepare_videos(data, test_ids, shape);
  const std::string fold = cfg.at("dataset").at("train_on").get<std::string>() == "all"
                               ? "all"
                               : data.folds[static_cast<std::size_t>(cfg.at("dataset").at("fold").get<int>())].name;
  Evaluation ev = evaluate(model, videos, tau, data.manifest.name, fold);
  require_coverage(ev.timelines, test_ids);
  if (task != "both") {
    const std::string keep = to_string(task_from_string(task));
    std::erase_if(ev.rows, [&](const ReportRow& r) { return r.task != keep; });
  }

  fs::create_directories(out);
  {
    auto os = open_out(out / "metrics.csv");
    write_report_csv(os, {{hash, seed, kCodeVersion}, ev.rows});
  }
  write_timelines(out / "timelines", data, videos, ev.predictions, provenance_line(hash, seed));
  write_attention(out / "attention", videos, ev.predictions, hash, seed);
  print_report_table(std::cout, ev.rows);
  std::printf("frame accuracy %.2f%%  (%zu test videos)\n", 100.0 * ev.frame_accuracy, videos.size());
  if (!report_is_monotone(ev.rows)) {
    std::cerr << "report violates F1@10 >= F1@25 >= F1@50\n";
    return kExitCheck;
  }
  return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& config_file, const std::vector<std::string>& rest, double tol,
                  const std::string& corrupt) {
  const Json cfg = build_config(config_file, rest);
  const auto rows = gradcheck_model(cfg, tol, corrupt);
  std::printf("%-28s %8s %12s  %s\n", "group", "scalars", "rel_error", "result");
  bool ok = true;
  for (const auto& r : rows) {
    std::printf("%-28s %8ld %12.3e  %s\n", r.group.c_str(), static_cast<long>(r.scalars), r.rel_error,
                r.pass ? "pass" : "FAIL");
    ok = ok && r.pass;
  }
  std::printf("%s (tolerance %.1e, 64-bit)\n", ok ? "all groups pass" : "gradient check failed", tol);
  return ok ? 0 : kExitCheck;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<ReportRow> rows;
  ReportProvenance prov;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path);
    F1Report r = read_report_csv(in);
    if (prov.config_hash.empty()) prov = r.provenance;
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  }
  const auto agg = aggregate_rows(rows);
  print_report_table(std::cout, agg);
  if (!out.empty()) {
    auto os = open_out(out);
    write_report_csv(os, {prov, agg});
  }
  bool ok = report_is_monotone(rows) && report_is_monotone(agg);
  if (!ok) std::cerr << "report violates F1@10 >= F1@25 >= F1@50\n";
  return ok ? 0 : kExitCheck;
}

// ---------------------------------------------------------------- ablate

int cmd_ablate(const std::string& study, const std::vector<std::uint64_t>& seeds, const fs::path& out,
               const std::string& config_file, const std::vector<std::string>& rest) {
  const Json cfg = build_config(config_file, rest);
  const std::string hash = config_hash(cfg);
  const DataBundle data = load_data(cfg);
  const auto cells = run_study(cfg, data, study, seeds, [](const std::string& line) {
    std::cout << line << std::endl;
  });
  const auto summary = summarize_study(cells);
  print_study_table(std::cout, summary);
  if (!out.empty()) {
    fs::create_directories(out);
    auto os = open_out(out / (study + ".csv"));
    write_provenance_comments(os, hash, seeds.empty() ? 0 : seeds.front());
    os << "variant,seed,task,kind,k,precision,recall,f1,tp,fp,fn\n";
    for (const auto& c : cells) {
      for (const auto& r : c.rows) {
        os << c.variant << "," << c.seed << "," << r.task << "," << r.kind << "," << r.k << "," << r.precision << ","
           << r.recall << "," << r.f1 << "," << r.tp << "," << r.fp << "," << r.fn << "\n";
      }
    }
    auto table = open_out(out / (study + "_table.txt"));
    table << "# " << provenance_line(hash, seeds.empty() ? 0 : seeds.front()) << "\n";
    print_study_table(table, summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-object interaction segmentation: training, evaluation and diagnostics"};
  app.require_subcommand(1);

  std::string config_file;
  std::string out;
  bool force = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset on disk");
  std::string preset = "tiny";
  std::uint64_t seed = 0;
  int visual_dim = 64;
  synth->add_option("--preset", preset, "tiny or small")->capture_default_str();
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--visual-dim", visual_dim)->capture_default_str();
  synth->add_option("--out", out)->required();
  synth->add_flag("--force", force, "Overwrite a nonempty output directory");

  auto* train = app.add_subcommand("train", "Two-stage training; dotted overrides like --fusion.variant=d");
  long validate_every = 0;
  train->add_option("--out", out, "Run directory")->required();
  train->add_option("--config", config_file, "JSON config patch");
  train->add_option("--validate-every", validate_every, "Validation period in steps (0: after each stage)");
  train->allow_extras();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on its test split");
  std::string ckpt;
  std::string task = "both";
  eval->add_option("--checkpoint", ckpt)->required();
  eval->add_option("--out", out)->required();
  eval->add_option("--task", task, "joint, known_segmentation or both")->capture_default_str();
  eval->add_option("--config", config_file);
  eval->add_flag("--force", force, "Evaluate despite a config hash mismatch");
  eval->allow_extras();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks on micro shapes");
  double tol = 1e-4;
  std::string corrupt;
  grad->add_option("--tolerance", tol)->capture_default_str();
  grad->add_option("--corrupt", corrupt, "Scale one group's analytic gradient (negative control)");
  grad->add_option("--config", config_file);
  grad->allow_extras();

  auto* report = app.add_subcommand("report", "Aggregate metrics CSVs across folds");
  std::vector<std::string> inputs;
  report->add_option("inputs", inputs, "metrics.csv files")->required();
  report->add_option("--out", out, "Aggregated CSV");

  auto* ablate = app.add_subcommand("ablate", "Run an ablation study over seeds");
  std::string study = "ablation";
  std::vector<std::uint64_t> seeds{0, 1, 2};
  ablate->add_option("--study", study, "ablation, fusion or objects")->capture_default_str();
  ablate->add_option("--seeds", seeds)->delimiter(',');
  ablate->add_option("--out", out);
  ablate->add_option("--config", config_file);
  ablate->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(preset, seed, visual_dim, out, force);
    if (*train) return cmd_train(out, config_file, train->remaining(), validate_every);
    if (*eval) return cmd_eval(ckpt, out, task, config_file, eval->remaining(), force);
    if (*grad) return cmd_gradcheck(config_file, grad->remaining(), tol, corrupt);
    if (*report) return cmd_report(inputs, out);
    if (*ablate) return cmd_ablate(study, seeds, out, config_file, ablate->remaining());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckError& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kExitCheck;
  }
  return 0;
}
