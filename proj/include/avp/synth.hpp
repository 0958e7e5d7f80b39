#pragma once

// Labeled synthetic scenarios in the on-disk ingestion formats, plus the
// brute-force oracles the tests check the pipeline against.

#include <cstdint>
#include <string>
#include <vector>

#include "avp/io.hpp"
#include "avp/segmenter.hpp"
#include "json.hpp"

namespace avp::synth {

struct SynthConfig {
  std::size_t num_characters = 5;
  std::size_t num_background = 3;
  std::size_t segments_per_character = 60;
  std::size_t face_dim = 64;
  std::size_t speech_dim = 64;
  double noise_sigma = 0.05;  // per-dimension embedding noise
  std::size_t cam_height = 8;
  std::size_t cam_width = 8;
  double bump_high = 0.9;
  double bump_low = 0.1;
  double cam_noise = 0.05;      // per-cell CAM noise, clipped to [0,1]
  double cam_confusion = 0.1;   // chance a segment's bump lands on the wrong face (or nowhere)
  double multi_face_fraction = 0.3;
  double fps = 25.0;
  std::uint64_t seed = 1;

  /// Throws avp::Error naming the first invalid field.
  void validate() const;
};

SynthConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const SynthConfig& config);

struct GroundTruth {
  std::vector<std::string> segment_speaker_track;  // per segment, in segment order
  std::vector<std::size_t> segment_speaker;        // character index per segment
  std::vector<std::size_t> track_identity;         // per track; >= num_characters means background
  std::vector<bool> track_background;
  std::vector<std::vector<float>> face_identities;    // characters first, then background identities
  std::vector<std::vector<float>> speech_identities;  // characters only
};

struct Scenario {
  SynthConfig config;
  std::vector<TimeInterval> vad;
  std::vector<double> shots;
  std::vector<VoicedSegment> segments;
  std::vector<FaceTrack> tracks;
  EmbeddingMatrix face_embeddings;
  EmbeddingMatrix speech_embeddings;
  CamVolume cams;
  std::vector<TrackLabel> labels;
  GroundTruth truth;
};

/// Deterministic in the config (seed included). Throws when identities
/// cannot be separated by 4 * noise_sigma within 1000 draws.
Scenario generate(const SynthConfig& config);

/// Writes every artifact plus manifest.json into `dir`; returns the manifest.
Manifest write_dataset(const Scenario& scenario, const fs::path& dir);

/// Fraction of face and speech embeddings whose nearest identity vector is
/// the generating one (1.0 means the ideal assignment is recoverable).
struct NearestIdentityAccuracy {
  double face = 0.0;
  double speech = 0.0;
};
NearestIdentityAccuracy nearest_identity_accuracy(const Scenario& scenario);

/// Literal triple sum over l and b of
/// co[l][b] * speech_membership[b] * face_membership[l].
double oracle_pms(const std::vector<double>& face_membership, const std::vector<double>& speech_membership,
                  const std::vector<std::vector<double>>& co_occurrence);

/// O(n^2) pair counting: (wins + ties / 2) / (positives * negatives).
double oracle_auroc(const std::vector<double>& scores, const std::vector<bool>& labels);

}  // namespace avp::synth
