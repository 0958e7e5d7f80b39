#include "avp/segmenter.hpp"

#include <algorithm>
#include <cstdio>

#include "avp/error.hpp"

namespace avp {

namespace {

// Pieces shorter than this are absorbed into the previous chunk, so a
// float remainder never becomes its own segment.
constexpr double kSplitEpsilon = 1e-9;

}  // namespace

std::string segment_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seg_%06zu", index);
  return buf;
}

std::vector<VoicedSegment> partition_voiced(const std::vector<TimeInterval>& vad,
                                            const std::vector<double>& shot_boundaries, double max_duration) {
  if (!(max_duration > 0.0)) throw Error("max_duration must be positive");
  for (std::size_t i = 0; i < vad.size(); ++i) {
    if (!(vad[i].start_s < vad[i].end_s)) throw Error("voice-activity interval with non-positive length");
    if (i > 0 && vad[i].start_s < vad[i - 1].end_s) throw Error("unsorted or overlapping voice-activity intervals");
  }
  for (std::size_t i = 1; i < shot_boundaries.size(); ++i)
    if (!(shot_boundaries[i - 1] < shot_boundaries[i])) throw Error("shot boundaries must be strictly increasing");

  std::vector<VoicedSegment> out;
  auto emit = [&](double start, double end) {
    const auto shot = static_cast<std::size_t>(
        std::upper_bound(shot_boundaries.begin(), shot_boundaries.end(), start) - shot_boundaries.begin());
    VoicedSegment seg;
    seg.segment_id = segment_id_for(out.size());
    seg.start_s = start;
    seg.end_s = end;
    seg.source_shot = shot;
    seg.short_segment = end - start < kShortSegmentSeconds;
    out.push_back(std::move(seg));
  };

  for (const auto& iv : vad) {
    std::vector<double> cuts{iv.start_s};
    for (double b : shot_boundaries)
      if (b > iv.start_s && b < iv.end_s) cuts.push_back(b);
    cuts.push_back(iv.end_s);

    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      const double start = cuts[p];
      const double end = cuts[p + 1];
      for (std::size_t k = 0;; ++k) {
        const double piece_start = start + static_cast<double>(k) * max_duration;
        const double next = start + static_cast<double>(k + 1) * max_duration;
        if (next >= end - kSplitEpsilon) {
          emit(piece_start, end);
          break;
        }
        emit(piece_start, next);
      }
    }
  }
  return out;
}

std::vector<std::string> overlap_tracks(const VoicedSegment& segment, const std::vector<FaceTrack>& tracks,
                                        double fps) {
  std::vector<std::string> out;
  for (const auto& t : tracks) {
    const double t0 = frame_start_time(t.frame_start, fps);
    const double t1 = frame_end_time(t.frame_end, fps);
    if (std::max(t0, segment.start_s) < std::min(t1, segment.end_s)) out.push_back(t.track_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace avp
