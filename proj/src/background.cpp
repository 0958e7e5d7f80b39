#include "avp/background.hpp"

#include <cmath>
#include <limits>

#include "avp/error.hpp"
#include "avp/kernels.hpp"

namespace avp {

std::vector<float> normalized_mean(const std::vector<std::span<const float>>& rows) {
  if (rows.empty()) return {};
  std::vector<double> acc(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += r[k];
  double sq = 0.0;
  for (double v : acc) sq += v * v;
  const double norm = std::sqrt(sq);
  std::vector<float> out(acc.size(), 0.0f);
  if (norm == 0.0) return out;
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / norm);
  return out;
}

namespace {

std::vector<float> plain_mean(const std::vector<std::span<const float>>& rows) {
  if (rows.empty()) return {};
  std::vector<double> acc(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += r[k];
  std::vector<float> out(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k] / static_cast<double>(rows.size()));
  return out;
}

}  // namespace

std::vector<CharacterProfile> profile_means(const ProfileSet& profiles, const InstanceEmbeddings& embeddings) {
  std::vector<CharacterProfile> out;
  for (std::size_t l = 0; l < profiles.face_clusters(); ++l) {
    std::vector<std::span<const float>> faces, speech;
    for (std::size_t r : profiles.face_model.clusters[l].members) {
      const std::size_t inst = profiles.members[r];
      faces.push_back(embeddings.face.row(inst));
      speech.push_back(embeddings.speech.row(inst));
    }
    CharacterProfile p;
    p.profile_id = "profile_" + std::to_string(l);
    p.face_mean = normalized_mean(faces);
    p.speech_mean = plain_mean(speech);
    p.member_count = faces.size();
    out.push_back(std::move(p));
  }
  return out;
}

TrackScore score_track(std::span<const float> track_embedding, const std::vector<CharacterProfile>& profiles) {
  if (profiles.empty()) throw Error("no character profiles");
  TrackScore score;
  score.min_profile_distance = std::numeric_limits<double>::infinity();
  for (const auto& p : profiles)
    score.min_profile_distance = std::min(score.min_profile_distance, kernels::euclidean(track_embedding, p.face_mean));
  return score;
}

bool classify(const TrackScore& score, double beta) { return score.min_profile_distance > beta; }

std::vector<TrackScore> score_tracks(const std::vector<FaceTrack>& tracks,
                                     const std::vector<CharacterProfile>& profiles, double beta) {
  if (profiles.empty()) throw Error("no character profiles");
  std::vector<TrackScore> out(tracks.size());
  const auto n = static_cast<std::ptrdiff_t>(tracks.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& t = tracks[static_cast<std::size_t>(i)];
    TrackScore s = score_track(t.embedding, profiles);
    s.track_id = t.track_id;
    s.is_background = classify(s, beta);
    s.low_confidence = t.length() < kMinConfidentTrackFrames;
    out[static_cast<std::size_t>(i)] = std::move(s);
  }
  return out;
}

}  // namespace avp
