#pragma once

#include <string>
#include <vector>

#include "avp/io.hpp"

namespace avp {

/// Speaker-homogeneous speech interval, bounded by a shot and by the maximum
/// segment duration.
struct VoicedSegment {
  std::string segment_id;
  double start_s = 0;
  double end_s = 0;
  std::size_t source_shot = 0;
  bool short_segment = false;  // shorter than kShortSegmentSeconds

  double duration() const { return end_s - start_s; }
  bool operator==(const VoicedSegment&) const = default;
};

inline constexpr double kShortSegmentSeconds = 0.05;

/// Identifier assigned to the i-th segment produced by partition_voiced().
std::string segment_id_for(std::size_t index);

/// Cuts voice-activity intervals at every shot boundary strictly inside
/// them, then splits each piece left to right into chunks of at most
/// `max_duration` seconds (the remainder goes last).
std::vector<VoicedSegment> partition_voiced(const std::vector<TimeInterval>& vad,
                                            const std::vector<double>& shot_boundaries,
                                            double max_duration = 1.0);

/// Tracks whose half-open span [frame_start/fps, (frame_end+1)/fps)
/// intersects the segment with positive measure, ordered by track_id.
std::vector<std::string> overlap_tracks(const VoicedSegment& segment,
                                        const std::vector<FaceTrack>& tracks, double fps);

/// Seconds covered by a track frame: [frame/fps, (frame+1)/fps).
inline double frame_start_time(std::int64_t frame, double fps) { return static_cast<double>(frame) / fps; }
inline double frame_end_time(std::int64_t frame, double fps) { return static_cast<double>(frame + 1) / fps; }

}  // namespace avp
