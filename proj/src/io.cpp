#include "avp/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "avp/error.hpp"
#include "avp/segmenter.hpp"
#include "json.hpp"

namespace avp {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

constexpr char kEmbeddingMagic[4] = {'A', 'V', 'E', 'M'};
constexpr char kCamMagic[4] = {'A', 'V', 'C', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

std::string read_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(std::string(what) + " not found: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// Bounds-checked little-endian cursor over a byte buffer.
class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void take(void* dst, std::size_t n) {
    if (bytes_.size() - pos_ < n) throw Error("truncated payload");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v{};
    take(&v, sizeof(T));
    return v;
  }
  void expect_magic(const char (&magic)[4]) {
    char got[4];
    take(got, 4);
    if (std::memcmp(got, magic, 4) != 0) throw Error("bad magic");
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::vector<json> read_json_lines(const fs::path& path, const char* what) {
  std::istringstream in(read_file(path, what));
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& context) {
  if (!obj.is_object() || !obj.contains(key)) throw Error(context + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(context + ": malformed field \"" + key + "\"");
  }
}

// Track ids may be written as numbers or strings; both become opaque strings.
std::string id_string(const json& v, const std::string& context) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw Error(context + ": malformed track_id");
}

}  // namespace

// ---- EmbeddingMatrix --------------------------------------------------------

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<std::string> row_ids, std::vector<float> values)
    : dim_(dim), row_ids_(std::move(row_ids)), values_(std::move(values)) {
  if (values_.size() != row_ids_.size() * dim_) throw Error("embedding values do not match rows x dim");
  for (std::size_t i = 0; i < row_ids_.size(); ++i) index_.emplace(row_ids_[i], i);
}

std::optional<std::size_t> EmbeddingMatrix::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingMatrix::normalize_rows() {
  for (std::size_t i = 0; i < rows(); ++i) {
    float* row = values_.data() + i * dim_;
    double sq = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      if (!std::isfinite(row[k])) throw Error("non-finite value in embedding row " + std::to_string(i));
      sq += static_cast<double>(row[k]) * row[k];
    }
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw Error("zero-norm embedding row " + std::to_string(i));
    if (std::abs(norm - 1.0) <= 1e-6) continue;
    for (std::size_t k = 0; k < dim_; ++k) row[k] = static_cast<float>(row[k] / norm);
  }
}

// ---- readers ----------------------------------------------------------------

Manifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error("manifest not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path, "manifest"));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  if (!doc.is_object()) throw Error("malformed manifest: expected an object");

  const fs::path base = fs::absolute(path).parent_path();
  auto resolve = [&](const char* key) -> fs::path {
    if (!doc.contains(key) || doc[key].is_null()) throw Error(std::string("missing artifact: ") + key);
    if (!doc[key].is_string()) throw Error(std::string("malformed field: ") + key);
    const fs::path p(doc[key].get<std::string>());
    return (p.is_absolute() ? p : base / p).lexically_normal();
  };

  Manifest m;
  m.video_id = doc.contains("video_id") && doc["video_id"].is_string() ? doc["video_id"].get<std::string>() : "";
  if (!doc.contains("fps") || !doc["fps"].is_number()) throw Error("malformed field: fps");
  m.fps = doc["fps"].get<double>();
  if (!(m.fps > 0.0) || !std::isfinite(m.fps)) throw Error("fps must be positive");
  m.vad = resolve("vad");
  m.shots = resolve("shots");
  m.tracks = resolve("tracks");
  m.face_embeddings = resolve("face_embeddings");
  m.speech_embeddings = resolve("speech_embeddings");
  m.cams = resolve("cams");
  if (doc.contains("labels") && !doc["labels"].is_null()) m.labels = resolve("labels");
  return m;
}

EmbeddingMatrix load_embeddings(const fs::path& path) {
  const std::string bytes = read_file(path, "embedding file");
  Reader r(bytes);
  r.expect_magic(kEmbeddingMagic);
  if (r.get<std::uint32_t>() != kFormatVersion) throw Error("unsupported embedding version");
  const auto rows = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  if (dim == 0) throw Error("embedding dim must be positive");

  std::vector<std::string> ids;
  ids.reserve(rows);
  for (std::uint32_t i = 0; i < rows; ++i) {
    const auto len = r.get<std::uint16_t>();
    std::string id(len, '\0');
    r.take(id.data(), len);
    ids.push_back(std::move(id));
  }
  std::vector<float> values(std::size_t{rows} * dim);
  r.take(values.data(), values.size() * sizeof(float));
  if (!r.at_end()) throw Error("trailing bytes after embedding payload");

  EmbeddingMatrix m(dim, std::move(ids), std::move(values));
  m.normalize_rows();
  return m;
}

CamVolume load_cams(const fs::path& path) {
  const std::string bytes = read_file(path, "CAM file");
  Reader r(bytes);
  r.expect_magic(kCamMagic);
  if (r.get<std::uint32_t>() != kFormatVersion) throw Error("unsupported CAM version");
  CamVolume cams;
  cams.frames = r.get<std::uint32_t>();
  cams.height = r.get<std::uint32_t>();
  cams.width = r.get<std::uint32_t>();
  cams.fps = r.get<float>();
  if (cams.frames < 1) throw Error("CAM volume has no frames");
  if (cams.height < 1 || cams.width < 1) throw Error("CAM grid must be non-empty");
  if (!(cams.fps > 0.0f)) throw Error("fps must be positive");
  cams.values.resize(std::size_t{cams.frames} * cams.height * cams.width);
  r.take(cams.values.data(), cams.values.size() * sizeof(float));
  if (!r.at_end()) throw Error("trailing bytes after CAM payload");
  for (std::size_t i = 0; i < cams.values.size(); ++i) {
    const float v = cams.values[i];
    if (!(v >= 0.0f && v <= 1.0f)) throw Error("CAM value outside [0,1] at index " + std::to_string(i));
  }
  return cams;
}

std::vector<FaceTrack> load_tracks(const fs::path& path) {
  std::vector<FaceTrack> tracks;
  std::size_t n = 0;
  for (const json& row : read_json_lines(path, "tracks file")) {
    const std::string ctx = "track record " + std::to_string(n++);
    FaceTrack t;
    if (!row.is_object() || !row.contains("track_id")) throw Error(ctx + ": missing field \"track_id\"");
    t.track_id = id_string(row["track_id"], ctx);
    t.frame_start = field<std::int64_t>(row, "frame_start", ctx);
    t.frame_end = field<std::int64_t>(row, "frame_end", ctx);
    if (t.frame_start < 0 || t.frame_end < t.frame_start) throw Error(ctx + ": invalid frame range");
    const auto boxes = field<std::vector<std::vector<double>>>(row, "boxes", ctx);
    if (static_cast<std::int64_t>(boxes.size()) != t.length())
      throw Error(ctx + ": expected one box per frame");
    for (const auto& b : boxes) {
      if (b.size() != 4) throw Error(ctx + ": box must have 4 coordinates");
      const Box box{b[0], b[1], b[2], b[3]};
      const bool in_range = std::all_of(b.begin(), b.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
      if (!in_range || !(box.x1 < box.x2) || !(box.y1 < box.y2)) throw Error(ctx + ": invalid box");
      t.boxes.push_back(box);
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

std::vector<TimeInterval> load_vad(const fs::path& path) {
  std::vector<TimeInterval> out;
  std::size_t n = 0;
  for (const json& row : read_json_lines(path, "vad file")) {
    const std::string ctx = "vad record " + std::to_string(n++);
    TimeInterval iv{field<double>(row, "start_s", ctx), field<double>(row, "end_s", ctx)};
    if (!(iv.start_s < iv.end_s)) throw Error(ctx + ": start_s must be below end_s");
    if (!out.empty() && iv.start_s < out.back().end_s)
      throw Error("unsorted or overlapping voice-activity intervals");
    out.push_back(iv);
  }
  return out;
}

std::vector<double> load_shots(const fs::path& path) {
  std::vector<double> out;
  try {
    out = json::parse(read_file(path, "shots file")).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed shots file: ") + e.what());
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i - 1] < out[i])) throw Error("shot boundaries must be strictly increasing");
  return out;
}

std::vector<TrackLabel> load_labels(const fs::path& path) {
  std::vector<TrackLabel> out;
  std::size_t n = 0;
  for (const json& row : read_json_lines(path, "labels file")) {
    const std::string ctx = "label record " + std::to_string(n++);
    TrackLabel l;
    if (!row.is_object() || !row.contains("track_id")) throw Error(ctx + ": missing field \"track_id\"");
    l.track_id = id_string(row["track_id"], ctx);
    l.character = field<std::string>(row, "character", ctx);
    l.background = field<bool>(row, "background", ctx);
    if (row.contains("speaking_frames"))
      l.speaking_frames = field<std::vector<std::pair<std::int64_t, std::int64_t>>>(row, "speaking_frames", ctx);
    out.push_back(std::move(l));
  }
  return out;
}

// ---- writers ----------------------------------------------------------------

void write_manifest(const fs::path& path, const Manifest& m) {
  json doc = {{"video_id", m.video_id},
              {"fps", m.fps},
              {"vad", m.vad.string()},
              {"shots", m.shots.string()},
              {"tracks", m.tracks.string()},
              {"face_embeddings", m.face_embeddings.string()},
              {"speech_embeddings", m.speech_embeddings.string()},
              {"cams", m.cams.string()}};
  if (m.labels) doc["labels"] = m.labels->string();
  open_out(path) << doc.dump(2) << '\n';
}

void write_embeddings(const fs::path& path, const EmbeddingMatrix& m) {
  auto out = open_out(path);
  out.write(kEmbeddingMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  for (const auto& id : m.row_ids()) {
    if (id.size() > 0xFFFF) throw Error("row id too long: " + id.substr(0, 32));
    put<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  out.write(reinterpret_cast<const char*>(m.values().data()),
            static_cast<std::streamsize>(m.values().size() * sizeof(float)));
}

void write_cams(const fs::path& path, const CamVolume& cams) {
  auto out = open_out(path);
  out.write(kCamMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, cams.frames);
  put<std::uint32_t>(out, cams.height);
  put<std::uint32_t>(out, cams.width);
  put<float>(out, cams.fps);
  out.write(reinterpret_cast<const char*>(cams.values.data()),
            static_cast<std::streamsize>(cams.values.size() * sizeof(float)));
}

void write_tracks(const fs::path& path, const std::vector<FaceTrack>& tracks) {
  auto out = open_out(path);
  for (const auto& t : tracks) {
    json boxes = json::array();
    for (const auto& b : t.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    out << json{{"track_id", t.track_id}, {"frame_start", t.frame_start}, {"frame_end", t.frame_end},
                {"boxes", boxes}}
               .dump()
        << '\n';
  }
}

void write_vad(const fs::path& path, const std::vector<TimeInterval>& intervals) {
  auto out = open_out(path);
  for (const auto& iv : intervals) out << json{{"start_s", iv.start_s}, {"end_s", iv.end_s}}.dump() << '\n';
}

void write_shots(const fs::path& path, const std::vector<double>& boundaries) {
  open_out(path) << json(boundaries).dump() << '\n';
}

void write_labels(const fs::path& path, const std::vector<TrackLabel>& labels) {
  auto out = open_out(path);
  for (const auto& l : labels) {
    out << json{{"track_id", l.track_id},
                {"character", l.character},
                {"background", l.background},
                {"speaking_frames", l.speaking_frames}}
               .dump()
        << '\n';
  }
}

// ---- alignment ----------------------------------------------------------------

ValidationReport validate_alignment(const Manifest& manifest, double max_duration) {
  ValidationReport report;
  auto attempt = [&](const char* what, auto&& load) -> bool {
    try {
      load();
      return true;
    } catch (const std::exception& e) {
      report.violations.push_back(std::string(what) + ": " + e.what());
      return false;
    }
  };

  std::vector<FaceTrack> tracks;
  std::vector<TimeInterval> vad;
  std::vector<double> shots;
  EmbeddingMatrix faces, speech;
  CamVolume cams;
  const bool tracks_ok = attempt("tracks", [&] { tracks = load_tracks(manifest.tracks); });
  const bool vad_ok = attempt("vad", [&] { vad = load_vad(manifest.vad); });
  const bool shots_ok = attempt("shots", [&] { shots = load_shots(manifest.shots); });
  const bool faces_ok = attempt("face_embeddings", [&] { faces = load_embeddings(manifest.face_embeddings); });
  const bool speech_ok = attempt("speech_embeddings", [&] { speech = load_embeddings(manifest.speech_embeddings); });
  const bool cams_ok = attempt("cams", [&] { cams = load_cams(manifest.cams); });

  if (tracks_ok && faces_ok) {
    std::map<std::string, std::size_t> counts;
    for (const auto& id : faces.row_ids()) ++counts[id];
    for (const auto& t : tracks) {
      const auto it = counts.find(t.track_id);
      if (it == counts.end()) {
        report.violations.push_back("unmatched track " + t.track_id);
      } else if (it->second > 1) {
        report.violations.push_back("duplicate face embedding for track " + t.track_id);
      }
    }
  }
  if (vad_ok && shots_ok && speech_ok) {
    try {
      for (const auto& seg : partition_voiced(vad, shots, max_duration)) {
        if (!speech.find(seg.segment_id)) report.violations.push_back("unmatched segment " + seg.segment_id);
      }
    } catch (const std::exception& e) {
      report.violations.push_back(std::string("segments: ") + e.what());
    }
  }
  if (tracks_ok && cams_ok) {
    std::int64_t last = -1;
    for (const auto& t : tracks) last = std::max(last, t.frame_end);
    const double needed = std::floor((static_cast<double>(last) + 0.5) / manifest.fps * cams.fps);
    if (last >= 0 && needed >= static_cast<double>(cams.frames))
      report.violations.push_back("cam/frame range mismatch");
  }
  return report;
}

}  // namespace avp
