#pragma once

// End-to-end orchestration shared by the CLI and the integration tests:
// load a manifest-rooted dataset, score instances, run profile matching,
// detect background tracks and evaluate against ground truth.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avp/background.hpp"
#include "avp/evaluator.hpp"
#include "avp/io.hpp"
#include "avp/profile_matcher.hpp"
#include "avp/segmenter.hpp"
#include "json.hpp"

namespace avp {

struct RunConfig {
  double tau = 0.7;
  double delta = 0.75;
  double beta = 0.45;
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 0;  // 0: same as min_cluster_size
  std::size_t max_iters = 50;
  double max_duration = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  MatcherParams matcher() const;
  nlohmann::json to_json() const;
};

/// Every artifact of a manifest, loaded and cross-referenced. Track
/// embeddings are attached to their tracks.
struct Dataset {
  Manifest manifest;
  std::vector<TimeInterval> vad;
  std::vector<double> shots;
  std::vector<FaceTrack> tracks;
  EmbeddingMatrix face_embeddings;
  EmbeddingMatrix speech_embeddings;
  CamVolume cams;
  std::optional<std::vector<TrackLabel>> labels;
};

Dataset load_dataset(const Manifest& manifest);

struct RunResult {
  std::vector<VoicedSegment> segments;
  InstanceEmbeddings embeddings;
  MatchResult match;
  std::vector<CharacterProfile> profiles;
  std::vector<TrackScore> track_scores;  // distances unset when there are no profiles
  bool has_profiles = false;
  std::vector<std::string> warnings;
};

RunResult run_pipeline(const Dataset& dataset, const RunConfig& config);

/// segments.jsonl, instances.jsonl, scores.jsonl, hci.jsonl, trace.json,
/// profiles.json, clusters.json and background.jsonl under `out_dir`.
void write_run_outputs(const RunResult& result, const fs::path& out_dir);

/// Evaluates an in-memory run. Requires ground-truth labels.
EvalReport evaluate(const Dataset& dataset, const RunResult& result);

/// Evaluates the artifacts of a previous run read back from `results_dir`.
EvalReport evaluate_outputs(const Dataset& dataset, const fs::path& results_dir);

/// eval.json and roc_points.csv under `out_dir`.
void write_eval_outputs(const Dataset& dataset, const EvalReport& report, const fs::path& results_dir,
                        const fs::path& out_dir);

}  // namespace avp
