#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avp/io.hpp"
#include "avp/segmenter.hpp"

namespace avp {

/// Candidate pairing of a voiced segment with one of the K face tracks that
/// overlap it.
struct SpeechFaceInstance {
  std::string segment_id;
  std::string track_id;
  std::size_t segment_index = 0;  // position in the segment list
  std::size_t track_index = 0;    // position in the track list
  double vas = 0.0;
  std::optional<double> pms;
  std::optional<double> fused;
  std::size_t k_count = 1;
};

/// High-confidence instances, kept as indices into an instance list in
/// insertion order.
class HciSet {
 public:
  HciSet() = default;
  explicit HciSet(std::size_t instance_count) : contains_(instance_count, false) {}

  bool insert(std::size_t index);
  bool contains(std::size_t index) const { return index < contains_.size() && contains_[index]; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<std::size_t>& members() const { return members_; }

 private:
  std::vector<std::size_t> members_;
  std::vector<bool> contains_;
};

struct RoiAccumulator {
  double sum = 0.0;
  std::size_t count = 0;
};

/// Sum and count of the CAM cells whose centers fall in [x1,x2) x [y1,y2)
/// after scaling the box to the grid. Falls back to the single cell nearest
/// the box center when no center is inside.
RoiAccumulator roi_accumulate(std::span<const float> cam_frame, std::size_t height, std::size_t width,
                              const Box& box);

double roi_mean(std::span<const float> cam_frame, std::size_t height, std::size_t width, const Box& box);

/// CAM frame shown at the given video frame.
std::size_t cam_frame_index(std::int64_t video_frame, double video_fps, const CamVolume& cams);

/// Mean CAM activation over every (frame, cell) sample of the track's ROI
/// during the segment. Throws when the track has no frame inside the segment.
double vas_score(const FaceTrack& track, const VoicedSegment& segment, const CamVolume& cams, double fps);

/// Same average taken over the whole track.
double whole_track_vas(const FaceTrack& track, const CamVolume& cams, double fps);

/// One instance per (segment, overlapping track); segments without any
/// overlapping track yield nothing. Scoring runs in parallel over instances.
std::vector<SpeechFaceInstance> build_instances(const std::vector<VoicedSegment>& segments,
                                                const std::vector<FaceTrack>& tracks, const CamVolume& cams,
                                                double fps);

/// Instances seen by a single face (K = 1) with VAS strictly above tau.
HciSet select_hci(const std::vector<SpeechFaceInstance>& instances, double tau);

}  // namespace avp
