#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace avp {

namespace fs = std::filesystem;

/// Paths of every artifact a run consumes, resolved against the manifest's
/// directory.
struct Manifest {
  std::string video_id;
  double fps = 0.0;
  fs::path vad;
  fs::path shots;
  fs::path tracks;
  fs::path face_embeddings;
  fs::path speech_embeddings;
  fs::path cams;
  std::optional<fs::path> labels;
};

/// Row-major f32 matrix with one opaque identifier per row. Rows are unit
/// norm once loaded through load_embeddings().
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::vector<std::string> row_ids, std::vector<float> values);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<float>& values() const { return values_; }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> find(const std::string& id) const;

  // L2-normalizes every row in place; throws on non-finite values or
  // zero-norm rows. Rows already unit norm within 1e-6 are left bit-exact.
  void normalize_rows();

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> row_ids_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Per-frame grids of speech-activity evidence in [0,1].
struct CamVolume {
  std::uint32_t frames = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  float fps = 0.0f;
  std::vector<float> values;  // frames x height x width

  std::span<const float> frame(std::size_t f) const {
    const std::size_t cells = std::size_t{height} * width;
    return {values.data() + f * cells, cells};
  }
  bool operator==(const CamVolume&) const = default;
};

/// Fractional rectangle, coordinates in [0,1] with x1 < x2, y1 < y2.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const Box&) const = default;
};

struct FaceTrack {
  std::string track_id;
  std::int64_t frame_start = 0;
  std::int64_t frame_end = 0;
  std::vector<Box> boxes;          // one per frame, frame_start..frame_end
  std::vector<float> embedding;    // unit vector; empty until attached

  std::int64_t length() const { return frame_end - frame_start + 1; }
  const Box& box_at(std::int64_t frame) const {
    return boxes[static_cast<std::size_t>(frame - frame_start)];
  }
  bool operator==(const FaceTrack&) const = default;
};

struct TimeInterval {
  double start_s = 0;
  double end_s = 0;
  bool operator==(const TimeInterval&) const = default;
};

/// Ground-truth annotation for one track.
struct TrackLabel {
  std::string track_id;
  std::string character;  // character identity; background identities too
  bool background = false;
  std::vector<std::pair<std::int64_t, std::int64_t>> speaking_frames;  // inclusive ranges
};

// ---- readers --------------------------------------------------------------

Manifest load_manifest(const fs::path& path);
EmbeddingMatrix load_embeddings(const fs::path& path);
CamVolume load_cams(const fs::path& path);
std::vector<FaceTrack> load_tracks(const fs::path& path);
std::vector<TimeInterval> load_vad(const fs::path& path);
std::vector<double> load_shots(const fs::path& path);
std::vector<TrackLabel> load_labels(const fs::path& path);

// ---- writers --------------------------------------------------------------

void write_manifest(const fs::path& path, const Manifest& manifest);
void write_embeddings(const fs::path& path, const EmbeddingMatrix& matrix);
void write_cams(const fs::path& path, const CamVolume& cams);
void write_tracks(const fs::path& path, const std::vector<FaceTrack>& tracks);
void write_vad(const fs::path& path, const std::vector<TimeInterval>& intervals);
void write_shots(const fs::path& path, const std::vector<double>& boundaries);
void write_labels(const fs::path& path, const std::vector<TrackLabel>& labels);

// ---- alignment ------------------------------------------------------------

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Cross-checks every artifact of a manifest. Load failures are reported as
/// violations rather than thrown. Segment ids are derived by partitioning the
/// voice-activity intervals with `max_duration`.
ValidationReport validate_alignment(const Manifest& manifest, double max_duration = 1.0);

}  // namespace avp
