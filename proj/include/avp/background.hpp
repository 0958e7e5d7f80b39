#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "avp/io.hpp"
#include "avp/profile_matcher.hpp"

namespace avp {

struct CharacterProfile {
  std::string profile_id;
  std::vector<float> face_mean;    // unit norm
  std::vector<float> speech_mean;  // plain mean, kept for reporting
  std::size_t member_count = 0;
};

struct TrackScore {
  std::string track_id;
  double min_profile_distance = 0.0;
  std::optional<bool> is_background;
  bool low_confidence = false;  // track shorter than kMinConfidentTrackFrames
};

inline constexpr std::int64_t kMinConfidentTrackFrames = 3;

/// One profile per face cluster of the final profile set, averaging the
/// embeddings of the instances the cluster holds.
std::vector<CharacterProfile> profile_means(const ProfileSet& profiles, const InstanceEmbeddings& embeddings);

/// Unit-normalized mean of the given rows.
std::vector<float> normalized_mean(const std::vector<std::span<const float>>& rows);

TrackScore score_track(std::span<const float> track_embedding, const std::vector<CharacterProfile>& profiles);

/// Background iff the distance to the nearest profile is strictly above beta.
bool classify(const TrackScore& score, double beta);

/// Scores and classifies every track, in parallel.
std::vector<TrackScore> score_tracks(const std::vector<FaceTrack>& tracks,
                                     const std::vector<CharacterProfile>& profiles, double beta);

}  // namespace avp
