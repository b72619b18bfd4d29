#include "gvhoi/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gvhoi/version.hpp"

namespace gvhoi {

namespace fs = std::filesystem;

const EntitySequence& DataBundle::video(const std::string& id) const {
  for (const auto& v : videos) {
    if (v.video_id == id) return v;
  }
  throw DataError("dataset '" + manifest.name + "' has no video '" + id + "'");
}

DataBundle bundle_from_synthetic(const synth::Benchmark& bench) {
  DataBundle d;
  auto& m = d.manifest;
  m.name = bench.name;
  m.width = synth::kWidth;
  m.height = synth::kHeight;
  m.keypoints = synth::kKeypoints;
  m.fps = 30.0;
  m.visual_dim = bench.videos.empty() ? 0 : bench.videos.front().entities.front().visual_dim();
  m.label_spaces["human"] = synth::human_action_names();
  m.label_spaces["object"] = synth::object_affordance_names();
  m.subjects = bench.subjects;
  for (const auto& v : bench.videos) m.videos.push_back({v.video_id, v.subject_ids, v.activity, ""});
  d.videos = bench.videos;
  return d;
}

DataBundle load_data(const Json& cfg) {
  const Json& ds = cfg.at("dataset");
  const std::string source = ds.at("source").get<std::string>();
  DataBundle d;
  std::vector<std::string> test_subjects = ds.at("test_subjects").get<std::vector<std::string>>();
  if (source == "synthetic") {
    const auto bench = synth::make_benchmark(synth::preset_from_string(ds.at("preset").get<std::string>()),
                                             ds.at("synth_seed").get<std::uint64_t>(), ds.at("visual_dim").get<int>());
    d = bundle_from_synthetic(bench);
    if (test_subjects.empty()) test_subjects = bench.test_subjects;
  } else {
    d.manifest = io::load_manifest(source);
    for (const auto& v : d.manifest.videos) d.videos.push_back(io::load_video(d.manifest, v.video_id));
    const auto it = d.manifest.provenance.find("test_subjects");
    if (test_subjects.empty() && it != d.manifest.provenance.end()) {
      std::stringstream ss(it->second);
      for (std::string s; std::getline(ss, s, ',');) test_subjects.push_back(s);
    }
  }
  const int stride = ds.at("subsample").get<int>();
  if (stride != 1) {
    for (auto& v : d.videos) v = subsample(v, stride);
  }
  d.folds = io::make_folds(d.manifest, io::protocol_from_string(ds.at("protocol").get<std::string>()), test_subjects);
  return d;
}

std::pair<std::vector<std::string>, std::vector<std::string>> select_split(const DataBundle& data, const Json& cfg) {
  const Json& ds = cfg.at("dataset");
  const auto train_on = ds.at("train_on").get<std::string>();
  if (train_on == "all") {
    std::vector<std::string> ids;
    for (const auto& v : data.videos) ids.push_back(v.video_id);
    return {ids, ids};
  }
  if (train_on != "train") throw ConfigError("dataset.train_on must be train or all");
  const int fold = ds.at("fold").get<int>();
  if (fold < 0 || fold >= static_cast<int>(data.folds.size())) {
    throw ConfigError("dataset.fold " + std::to_string(fold) + " out of range (" + std::to_string(data.folds.size()) +
                      " folds)");
  }
  return {data.folds[static_cast<std::size_t>(fold)].train, data.folds[static_cast<std::size_t>(fold)].test};
}

DataShape data_shape(const DataBundle& data, const Json& cfg) {
  DataShape s;
  s.keypoints = data.manifest.keypoints;
  s.visual_dim = data.manifest.visual_dim;
  int max_objects = 0;
  for (const auto& v : data.videos) {
    s.human_slots = std::max(s.human_slots, v.humans());
    max_objects = std::max(max_objects, v.objects());
  }
  const int cap = cfg.at("object_count_cap").get<int>();
  s.object_slots = cap >= 0 ? std::min(cap, max_objects) : max_objects;
  s.n_sub_activities = data.manifest.classes(EntityKind::human);
  s.n_affordances = data.manifest.classes(EntityKind::object);
  return s;
}

std::vector<PreparedVideo> prepare_videos(const DataBundle& data, const std::vector<std::string>& ids,
                                          const DataShape& shape) {
  std::vector<PreparedVideo> out;
  const NormalizationSpec norm{data.manifest.width, data.manifest.height};
  for (const auto& id : ids) out.push_back(prepare_video(data.video(id), shape.human_slots, shape.object_slots, norm));
  return out;
}

AdamW::AdamW(const OptimizerConfig& cfg, std::vector<Var<float>> params) : cfg_(cfg), params_(std::move(params)) {
  for (const auto& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  double clip_scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (auto& p : params_) {
      if (!p.has_grad()) continue;
      for (float g : p.grad().data) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) clip_scale = cfg_.grad_clip / norm;
  }
  const float b1 = static_cast<float>(cfg_.beta1);
  const float b2 = static_cast<float>(cfg_.beta2);
  const float decay = static_cast<float>(1.0 - cfg_.lr * cfg_.weight_decay);
  const float step_size = static_cast<float>(cfg_.lr / bc1);
  const float inv_bc2 = static_cast<float>(1.0 / bc2);
  const float eps = static_cast<float>(cfg_.eps);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    Tensor<float>& w = p.mutable_value();
    const bool has = p.has_grad();
    const float* g = has ? p.grad().ptr() : nullptr;
    float* m = m_[i].ptr();
    float* v = v_[i].ptr();
    for (std::size_t j = 0; j < w.numel(); ++j) {
      const float gj = has ? static_cast<float>(g[j] * clip_scale) : 0.0f;
      m[j] = b1 * m[j] + (1.0f - b1) * gj;
      v[j] = b2 * v[j] + (1.0f - b2) * gj * gj;
      w[j] = w[j] * decay - step_size * m[j] / (std::sqrt(v[j] * inv_bc2) + eps);
    }
  }
}

bool trainable_in_stage(const std::string& param_name, int stage) {
  if (stage >= 2) return true;
  const std::string group = ParamSet<float>::group_of(param_name);
  return group != "boundary" && group != "gru_fwd" && group != "gru_bwd";
}

CounterRng gumbel_stream(std::uint64_t seed, long step, const std::string& video_id) {
  return CounterRng(seed).fork("gumbel").fork(static_cast<std::uint64_t>(step)).fork(video_id);
}

namespace {

std::string param_norms(const ParamSet<float>& ps) {
  std::ostringstream os;
  for (const auto& [name, v] : ps.entries()) {
    double sq = 0.0;
    for (float x : v.value().data) sq += static_cast<double>(x) * x;
    os << "\n  " << name << " |w|=" << std::sqrt(sq);
  }
  return os.str();
}

}  // namespace

TrainResult train(Model<float>& model, const std::vector<PreparedVideo>& videos, const TrainConfig& tc,
                  const TrainHooks& hooks) {
  if (videos.empty()) throw DataError("no training videos");
  TrainResult result;
  const int batch = std::min<int>(tc.optimizer.batch, static_cast<int>(videos.size()));
  const CounterRng shuffle_rng = CounterRng(tc.seed).fork("shuffle");
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  long epoch = 0;
  auto next_video = [&]() {
    if (cursor == order.size()) {
      order.resize(videos.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      RngStream r(shuffle_rng.fork(static_cast<std::uint64_t>(epoch++)));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[r.below(i)]);
      cursor = 0;
    }
    return order[cursor++];
  };

  long step = 0;
  const double tau0 = model.cfg.head.gumbel.temperature;
  for (int stage = 1; stage <= 2; ++stage) {
    const long steps = stage == 1 ? tc.stage1_steps : tc.stage2_steps;
    if (steps == 0) continue;
    std::vector<Var<float>> trainable;
    for (const auto& [name, v] : model.params.entries()) {
      if (trainable_in_stage(name, stage)) trainable.push_back(v);
    }
    AdamW opt(tc.optimizer, trainable);
    long stage_step = 0;
    for (long s = 0; s < steps; ++s) {
      ++step;
      ++stage_step;
      model.params.zero_grad();
      StepLog log;
      log.step = step;
      log.stage = stage;
      log.tau = stage == 2 ? temperature_at(model.cfg.head.gumbel, stage_step - 1) : tau0;
      for (int b = 0; b < batch; ++b) {
        const PreparedVideo& v = videos[next_video()];
        ForwardOptions fo;
        fo.uniform_boundary = stage == 1;
        fo.tau = log.tau;
        fo.sample_noise = true;
        fo.noise_rng = gumbel_stream(tc.seed, step, v.video_id);
        const auto fr = forward(model, v, fo);
        const auto lb = head_loss(fr.head, v.labels);
        const double value = lb.total.value()[0];
        if (!std::isfinite(value)) {
          throw CheckError("non-finite loss at step " + std::to_string(step) + " (video '" + v.video_id +
                           "'); parameter norms:" + param_norms(model.params));
        }
        ag::backward(lb.total, 1.0f / static_cast<float>(batch));
        log.loss += value / batch;
        log.human_loss += lb.human / batch;
        log.object_loss += lb.object / batch;
      }
      // Frozen groups may still have received gradients; they are simply not stepped.
      opt.step();
      result.log.push_back(log);
      if (hooks.on_step) hooks.on_step(log);
      if (hooks.on_validate && hooks.validate_every > 0 && step % hooks.validate_every == 0) hooks.on_validate(step, stage);
    }
    result.final_tau = stage == 2 ? temperature_at(model.cfg.head.gumbel, stage_step) : tau0;
    if (hooks.on_validate && !(hooks.validate_every > 0 && step % hooks.validate_every == 0)) hooks.on_validate(step, stage);
  }
  model.params.zero_grad();
  result.steps = step;
  return result;
}

std::vector<VideoPrediction> predict(const Model<float>& model, const std::vector<PreparedVideo>& videos, double tau) {
  ag::NoGradGuard no_grad;
  std::vector<VideoPrediction> out;
  for (const auto& v : videos) {
    ForwardOptions fo;
    fo.tau = tau;
    const auto fr = forward(model, v, fo);
    out.push_back({v.video_id, frame_predictions(fr, v), fr.boundary_decisions, fr.neighbor_attn});
  }
  return out;
}

std::vector<EntityTimelines> entity_timelines(const std::vector<PreparedVideo>& videos,
                                              const std::vector<VideoPrediction>& preds) {
  std::vector<EntityTimelines> out;
  for (const auto& v : videos) {
    const auto it = std::find_if(preds.begin(), preds.end(), [&](const auto& p) { return p.video_id == v.video_id; });
    if (it == preds.end()) throw DataError("missing prediction for test video '" + v.video_id + "'");
    const int e_n = v.entities();
    for (int e = 0; e < e_n; ++e) {
      EntityTimelines et;
      et.video_id = v.video_id;
      et.kind = to_string(v.kind(e));
      et.labels = v.slot_labels(e);
      if (std::all_of(et.labels.begin(), et.labels.end(), [](int l) { return l < 0; })) continue;
      et.frame_pred.resize(static_cast<std::size_t>(v.frames));
      for (int t = 0; t < v.frames; ++t) {
        et.frame_pred[static_cast<std::size_t>(t)] = it->frame_pred[static_cast<std::size_t>(t) * e_n + e];
      }
      out.push_back(std::move(et));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCkptMagic[8] = {'G', 'V', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  std::string where;

  void need(std::size_t n) {
    if (pos + n > buf.size()) {
      throw DataError(where + ": truncated checkpoint: expected " + std::to_string(pos + n) + " bytes, got " +
                      std::to_string(buf.size()));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

Checkpoint make_checkpoint(const Model<float>& model, const Json& cfg, const DataShape& shape, const Json& meta) {
  Checkpoint c;
  c.config = cfg;
  c.config_hash = config_hash(cfg);
  c.meta = meta;
  c.meta["code_version"] = kCodeVersion;
  c.meta["data_shape"] = {{"keypoints", shape.keypoints},         {"visual_dim", shape.visual_dim},
                          {"human_slots", shape.human_slots},     {"object_slots", shape.object_slots},
                          {"n_sub_activities", shape.n_sub_activities}, {"n_affordances", shape.n_affordances}};
  for (const auto& [name, v] : model.params.entries()) c.tensors.emplace_back(name, v.value());
  return c;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  std::string out(kCkptMagic, sizeof kCkptMagic);
  put_u32(out, kCkptVersion);
  put_str(out, ckpt.config_hash);
  put_str(out, ckpt.config.dump());
  put_str(out, ckpt.meta.dump());
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float x : t.data) {
      std::uint32_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      put_u32(out, bits);
    }
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kCkptMagic || std::memcmp(buf.data(), kCkptMagic, sizeof kCkptMagic) != 0) {
    throw DataError(path.string() + ": bad header");
  }
  Reader r{buf, sizeof kCkptMagic, path.string()};
  const std::uint32_t version = r.u32();
  if (version != kCkptVersion) throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.config_hash = r.str();
  try {
    c.config = Json::parse(r.str());
    c.meta = Json::parse(r.str());
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.u32()));
    Tensor<float> t(shape);
    r.need(4 * t.numel());
    for (std::size_t j = 0; j < t.numel(); ++j) {
      const std::uint32_t bits = r.u32();
      std::memcpy(&t[j], &bits, sizeof bits);
    }
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (r.pos != buf.size()) throw DataError(path.string() + ": trailing bytes after checkpoint tensors");
  return c;
}

DataShape checkpoint_shape(const Checkpoint& ckpt) {
  const Json& s = ckpt.meta.at("data_shape");
  DataShape d;
  d.keypoints = s.at("keypoints").get<int>();
  d.visual_dim = s.at("visual_dim").get<int>();
  d.human_slots = s.at("human_slots").get<int>();
  d.object_slots = s.at("object_slots").get<int>();
  d.n_sub_activities = s.at("n_sub_activities").get<int>();
  d.n_affordances = s.at("n_affordances").get<int>();
  return d;
}

Model<float> restore_model(const Checkpoint& ckpt) {
  Model<float> m = Model<float>::make(model_config(ckpt.config, checkpoint_shape(ckpt)), 0);
  const auto& entries = m.params.entries();
  if (entries.size() != ckpt.tensors.size()) {
    throw DataError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, the model expects " +
                    std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, t] = ckpt.tensors[i];
    if (name != entries[i].first || t.shape != entries[i].second.shape()) {
      throw DataError("checkpoint tensor '" + name + "' " + shape_str(t.shape) + " does not match model parameter '" +
                      entries[i].first + "' " + shape_str(entries[i].second.shape()));
    }
    Var<float> v = entries[i].second;
    v.mutable_value() = t;
  }
  return m;
}

}  // namespace gvhoi
