#include "gvhoi/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gvhoi/core/error.hpp"
#include "gvhoi/core/rng.hpp"

namespace gvhoi::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[6] = {'G', 'V', 'H', 'O', 'I', '1'};
constexpr std::uint8_t kDtypeF32 = 1;

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return static_cast<T>(v);
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key)) throw DataError(where.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(where.string() + ": field '" + key + "': " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_tensor(const fs::path& path, const Tensor<float>& t) {
  std::string out(kMagic, sizeof kMagic);
  out.push_back(static_cast<char>(kDtypeF32));
  out.push_back(static_cast<char>(t.rank()));
  put_le<std::uint64_t>(out, t.numel());
  for (int d : t.shape) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (float v : t.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_le<std::uint32_t>(out, bits);
  }
  write_file(path, out);
}

Tensor<float> read_tensor(const fs::path& path) {
  const auto bytes = read_bytes(path);
  const std::string where = path.string() + ": ";
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw DataError(where + "bad header");
  if (static_cast<std::uint8_t>(bytes[6]) != kDtypeF32) throw DataError(where + "bad header (unsupported dtype)");
  const int rank = static_cast<std::uint8_t>(bytes[7]);
  const auto count = get_le<std::uint64_t>(bytes.data() + 8);
  const std::size_t dims_end = 16 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < dims_end) {
    throw DataError(where + "truncated: expected " + std::to_string(dims_end + 4 * count) + " bytes, got " +
                    std::to_string(bytes.size()));
  }
  Shape shape;
  for (int i = 0; i < rank; ++i) shape.push_back(static_cast<int>(get_le<std::uint32_t>(bytes.data() + 16 + 4 * i)));
  if (shape_numel(shape) != count) throw DataError(where + "bad header (dims do not match element count)");
  const std::size_t expected = dims_end + 4 * count;
  if (bytes.size() != expected) {
    throw DataError(where + (bytes.size() < expected ? "truncated: " : "trailing bytes: ") + "expected " +
                    std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
  }
  Tensor<float> t(shape);
  for (std::size_t i = 0; i < count; ++i) {
    const auto bits = get_le<std::uint32_t>(bytes.data() + dims_end + 4 * i);
    std::memcpy(&t[i], &bits, sizeof bits);
  }
  return t;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t n = std::min<std::size_t>(3, bytes.size() - i);
    std::uint32_t v = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (n > 1) v |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (n > 2) v |= bytes[i + 2];
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(n > 1 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back(n > 2 ? kAlphabet[v & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw DataError("base64: length not a multiple of 4");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + static_cast<std::size_t>(j)];
      if (c == '=') {
        ++pad;
        v <<= 6;
        continue;
      }
      const int x = value(c);
      if (x < 0 || pad > 0) throw DataError("base64: invalid character");
      v = (v << 6) | static_cast<std::uint32_t>(x);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& flags) {
  std::vector<std::uint8_t> out((flags.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return out;
}

std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t count) {
  if (bytes.size() != (count + 7) / 8) {
    throw DataError("bitset holds " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string((count + 7) / 8));
  }
  std::vector<std::uint8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return out;
}

std::string file_checksum(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return "fnv1a64:" + hex64(CounterRng::hash_string(std::string_view(bytes.data(), bytes.size())));
}

const VideoEntry& DatasetManifest::video(const std::string& id) const {
  for (const auto& v : videos) {
    if (v.video_id == id) return v;
  }
  throw DataError("dataset '" + name + "' has no video '" + id + "'");
}

int DatasetManifest::classes(EntityKind kind) const {
  const auto it = label_spaces.find(to_string(kind));
  return it == label_spaces.end() ? 0 : static_cast<int>(it->second.size());
}

void write_dataset(const fs::path& dir, DatasetManifest manifest, const std::vector<EntitySequence>& videos) {
  fs::create_directories(dir / "videos");
  fs::create_directories(dir / "tensors");
  manifest.videos.clear();
  std::set<std::string> registry(manifest.subjects.begin(), manifest.subjects.end());
  for (const auto& seq : videos) {
    validate(seq);
    for (const auto& s : seq.subject_ids) {
      if (!registry.count(s)) {
        manifest.subjects.push_back(s);
        registry.insert(s);
      }
    }
    json meta;
    meta["video_id"] = seq.video_id;
    meta["frames"] = seq.frames;
    meta["fps"] = seq.fps;
    meta["activity"] = seq.activity;
    meta["subject_ids"] = seq.subject_ids;
    meta["entities"] = json::array();
    for (const auto& e : seq.entities) {
      json je;
      je["entity_id"] = e.entity_id;
      je["kind"] = to_string(e.kind);
      const std::string stem = seq.video_id + "_" + e.entity_id;
      const fs::path kp = fs::path("tensors") / (stem + "_kp.bin");
      const fs::path vis = fs::path("tensors") / (stem + "_vis.bin");
      write_tensor(dir / kp, e.keypoints);
      write_tensor(dir / vis, e.visual);
      je["keypoints"] = {{"path", kp.generic_string()}, {"checksum", file_checksum(dir / kp)}};
      je["visual"] = {{"path", vis.generic_string()}, {"checksum", file_checksum(dir / vis)}};
      je["keypoint_mask"] = base64_encode(pack_bits(e.keypoint_mask));
      json runs = json::array();
      for (const auto& s : extract_segments(e.labels, e.label_mask)) runs.push_back({s.start, s.end, s.label});
      je["labels"] = runs;
      meta["entities"].push_back(je);
    }
    const fs::path meta_path = fs::path("videos") / (seq.video_id + ".json");
    write_file(dir / meta_path, meta.dump(1) + "\n");
    manifest.videos.push_back({seq.video_id, seq.subject_ids, seq.activity, meta_path.generic_string()});
  }
  json m;
  m["format"] = "gvhoi-dataset";
  m["version"] = 1;
  m["name"] = manifest.name;
  m["resolution"] = {manifest.width, manifest.height};
  m["keypoints"] = manifest.keypoints;
  m["fps"] = manifest.fps;
  m["visual_dim"] = manifest.visual_dim;
  m["label_spaces"] = manifest.label_spaces;
  m["subjects"] = manifest.subjects;
  m["videos"] = json::array();
  for (const auto& v : manifest.videos) {
    m["videos"].push_back({{"video_id", v.video_id}, {"subject_ids", v.subject_ids}, {"activity", v.activity},
                           {"meta", v.meta}});
  }
  if (!manifest.provenance.empty()) m["provenance"] = manifest.provenance;
  write_file(dir / "manifest.json", m.dump(1) + "\n");
}

DatasetManifest load_manifest(const fs::path& path) {
  fs::path p = path;
  if (!fs::exists(p) && p.is_relative()) {
    if (const char* root = std::getenv("GVHOI_DATA_ROOT")) p = fs::path(root) / p;
  }
  if (fs::is_directory(p)) p /= "manifest.json";
  if (!fs::exists(p)) throw DataError("dataset manifest not found: " + path.string());
  const json m = read_json(p);
  DatasetManifest man;
  man.root = p.parent_path();
  if (field<std::string>(m, "format", p) != "gvhoi-dataset") throw DataError(p.string() + ": not a gvhoi dataset manifest");
  man.name = field<std::string>(m, "name", p);
  const auto res = field<std::vector<double>>(m, "resolution", p);
  if (res.size() != 2 || res[0] <= 0 || res[1] <= 0) throw DataError(p.string() + ": field 'resolution' must be [w, h] > 0");
  man.width = res[0];
  man.height = res[1];
  man.keypoints = field<int>(m, "keypoints", p);
  man.fps = field<double>(m, "fps", p);
  man.visual_dim = field<int>(m, "visual_dim", p);
  man.label_spaces = field<std::map<std::string, std::vector<std::string>>>(m, "label_spaces", p);
  for (const auto& [kind, names] : man.label_spaces) {
    entity_kind_from_string(kind);
    if (names.empty()) throw DataError(p.string() + ": label space '" + kind + "' is empty");
  }
  man.subjects = field<std::vector<std::string>>(m, "subjects", p);
  const std::set<std::string> registry(man.subjects.begin(), man.subjects.end());
  for (const auto& v : field<json>(m, "videos", p)) {
    VideoEntry e{field<std::string>(v, "video_id", p), field<std::vector<std::string>>(v, "subject_ids", p),
                 field<std::string>(v, "activity", p), field<std::string>(v, "meta", p)};
    for (const auto& s : e.subject_ids) {
      if (!registry.count(s)) throw DataError(p.string() + ": video '" + e.video_id + "' subject '" + s + "' not in registry");
    }
    man.videos.push_back(std::move(e));
  }
  if (m.contains("provenance")) man.provenance = field<std::map<std::string, std::string>>(m, "provenance", p);
  return man;
}

EntitySequence load_video(const DatasetManifest& man, const std::string& video_id) {
  const VideoEntry& entry = man.video(video_id);
  const fs::path meta_path = man.root / entry.meta;
  const json meta = read_json(meta_path);
  EntitySequence seq;
  seq.video_id = field<std::string>(meta, "video_id", meta_path);
  if (seq.video_id != video_id) throw DataError(meta_path.string() + ": field 'video_id' is '" + seq.video_id + "'");
  seq.frames = field<int>(meta, "frames", meta_path);
  seq.fps = field<double>(meta, "fps", meta_path);
  seq.activity = field<std::string>(meta, "activity", meta_path);
  seq.subject_ids = field<std::vector<std::string>>(meta, "subject_ids", meta_path);
  for (const auto& je : field<json>(meta, "entities", meta_path)) {
    EntityTrack tr;
    tr.entity_id = field<std::string>(je, "entity_id", meta_path);
    tr.kind = entity_kind_from_string(field<std::string>(je, "kind", meta_path));
    const std::string where = meta_path.string() + ": entity '" + tr.entity_id + "': ";
    auto tensor = [&](const char* key) {
      const json ref = field<json>(je, key, meta_path);
      const fs::path tp = man.root / field<std::string>(ref, "path", meta_path);
      const std::string want = field<std::string>(ref, "checksum", meta_path);
      const std::string got = file_checksum(tp);
      if (got != want) throw DataError(tp.string() + ": checksum mismatch (manifest " + want + ", file " + got + ")");
      return read_tensor(tp);
    };
    tr.keypoints = tensor("keypoints");
    tr.visual = tensor("visual");
    if (tr.keypoints.rank() != 3 || tr.keypoints.dim(0) != seq.frames || tr.keypoints.dim(1) != man.keypoints ||
        tr.keypoints.dim(2) != 2) {
      throw DataError(where + "field 'keypoints' has shape " + shape_str(tr.keypoints.shape) + ", expected [" +
                      std::to_string(seq.frames) + ", " + std::to_string(man.keypoints) + ", 2]");
    }
    if (tr.visual.rank() != 2 || tr.visual.dim(0) != seq.frames || tr.visual.dim(1) != man.visual_dim) {
      throw DataError(where + "field 'visual' has shape " + shape_str(tr.visual.shape) + ", expected [" +
                      std::to_string(seq.frames) + ", " + std::to_string(man.visual_dim) + "]");
    }
    tr.keypoint_mask = unpack_bits(base64_decode(field<std::string>(je, "keypoint_mask", meta_path)),
                                   static_cast<std::size_t>(seq.frames) * man.keypoints);
    // Missing keypoints are masked entries with zero coordinates.
    for (std::size_t i = 0; i < tr.keypoint_mask.size(); ++i) {
      if (!tr.keypoint_mask[i]) tr.keypoints[2 * i] = tr.keypoints[2 * i + 1] = 0.0f;
    }
    tr.labels.assign(static_cast<std::size_t>(seq.frames), -1);
    tr.label_mask.assign(static_cast<std::size_t>(seq.frames), 0);
    const int n_classes = man.classes(tr.kind);
    for (const auto& run : field<json>(je, "labels", meta_path)) {
      const auto r = run.get<std::vector<int>>();
      if (r.size() != 3 || r[0] < 0 || r[1] < r[0] || r[1] >= seq.frames) {
        throw DataError(where + "field 'labels' has an invalid run " + run.dump());
      }
      if (r[2] < 0 || r[2] >= n_classes) {
        throw DataError(where + "field 'labels' class " + std::to_string(r[2]) + " outside the " + to_string(tr.kind) +
                        " label space of " + std::to_string(n_classes));
      }
      for (int t = r[0]; t <= r[1]; ++t) {
        tr.labels[static_cast<std::size_t>(t)] = r[2];
        tr.label_mask[static_cast<std::size_t>(t)] = 1;
      }
    }
    seq.entities.push_back(std::move(tr));
  }
  validate(seq);
  return seq;
}

Protocol protocol_from_string(const std::string& s) {
  if (s == "loso" || s == "leave-one-subject-out") return Protocol::leave_one_subject_out;
  if (s == "l2so" || s == "leave-two-subjects-out") return Protocol::leave_two_subjects_out;
  if (s == "fixed" || s == "fixed-test-subjects") return Protocol::fixed_test_subjects;
  throw ConfigError("unknown fold protocol '" + s + "'");
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::leave_one_subject_out: return "leave-one-subject-out";
    case Protocol::leave_two_subjects_out: return "leave-two-subjects-out";
    case Protocol::fixed_test_subjects: return "fixed-test-subjects";
  }
  return "?";
}

namespace {

bool any_in(const std::vector<std::string>& xs, const std::set<std::string>& s) {
  return std::any_of(xs.begin(), xs.end(), [&](const auto& x) { return s.count(x) > 0; });
}

bool all_in(const std::vector<std::string>& xs, const std::set<std::string>& s) {
  return std::all_of(xs.begin(), xs.end(), [&](const auto& x) { return s.count(x) > 0; });
}

Fold split_by(const DatasetManifest& man, const std::string& name, const std::set<std::string>& test) {
  Fold f;
  f.name = name;
  for (const auto& v : man.videos) {
    if (all_in(v.subject_ids, test)) {
      f.test.push_back(v.video_id);
    } else if (!any_in(v.subject_ids, test)) {
      f.train.push_back(v.video_id);
    } else {
      f.excluded.push_back(v.video_id);
    }
  }
  // Asserted, not assumed.
  std::set<std::string> train_subjects;
  for (const auto& id : f.train) {
    for (const auto& s : man.video(id).subject_ids) train_subjects.insert(s);
  }
  for (const auto& id : f.test) {
    if (any_in(man.video(id).subject_ids, train_subjects)) {
      throw CheckError("fold '" + name + "' shares a subject between train and test");
    }
  }
  if (f.train.empty()) throw ConfigError("fold '" + name + "' leaves no training videos");
  if (f.test.empty()) throw ConfigError("fold '" + name + "' has no test videos");
  return f;
}

}  // namespace

std::vector<Fold> make_folds(const DatasetManifest& man, Protocol protocol, const std::vector<std::string>& test_subjects) {
  if (protocol == Protocol::fixed_test_subjects) {
    if (test_subjects.empty()) throw ConfigError("fixed-test-subjects needs a list of test subjects");
    const std::set<std::string> reg(man.subjects.begin(), man.subjects.end());
    for (const auto& s : test_subjects) {
      if (!reg.count(s)) throw ConfigError("test subject '" + s + "' is not in the registry");
    }
    return {split_by(man, "fixed", std::set<std::string>(test_subjects.begin(), test_subjects.end()))};
  }

  // Union-find over subjects that share a video.
  const std::size_t n = man.subjects.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[man.subjects[i]] = i;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& v : man.videos) {
    for (std::size_t i = 1; i < v.subject_ids.size(); ++i) {
      const std::size_t a = find(index.at(v.subject_ids[0]));
      const std::size_t b = find(index.at(v.subject_ids[i]));
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::vector<std::string>> groups;
  std::map<std::size_t, std::size_t> group_of_root;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (!group_of_root.count(r)) {
      group_of_root[r] = groups.size();
      groups.emplace_back();
    }
    groups[group_of_root[r]].push_back(man.subjects[i]);
  }

  std::vector<std::vector<std::string>> units;
  if (protocol == Protocol::leave_one_subject_out) {
    units = groups;
  } else {
    for (const auto& g : groups) {
      if (units.empty() || units.back().size() >= 2) units.emplace_back();
      units.back().insert(units.back().end(), g.begin(), g.end());
    }
    if (units.size() > 1 && units.back().size() < 2) {
      auto last = units.back();
      units.pop_back();
      units.back().insert(units.back().end(), last.begin(), last.end());
    }
  }
  if (units.size() < 2) {
    throw ConfigError(to_string(protocol) + " needs at least two subject units, the registry yields " +
                      std::to_string(units.size()));
  }
  std::vector<Fold> folds;
  for (const auto& u : units) {
    std::string name;
    for (const auto& s : u) name += (name.empty() ? "" : "+") + s;
    folds.push_back(split_by(man, name, std::set<std::string>(u.begin(), u.end())));
  }
  return folds;
}

}  // namespace gvhoi::io
