#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avp/background.hpp"
#include "avp/io.hpp"
#include "avp/vas.hpp"

namespace avp {

struct LabeledScore {
  std::string unit_id;
  double score = 0.0;
  bool label = false;
};

struct EvalReport {
  double active_speaker_auroc = 0.0;  // final iteration
  double vas_only_auroc = 0.0;        // seed scores, before any profile evidence
  double background_auroc = 0.0;
  std::optional<double> gt_baseline_auroc;
  std::vector<double> per_iteration_aurocs;  // entry 0 is VAS only, entry i is iteration i
  std::vector<std::string> misalignments;
  std::vector<std::pair<double, double>> active_speaker_roc;  // (FPR, TPR)
  std::vector<std::pair<double, double>> background_roc;
};

/// Track-level active-speaker score: the best instance score over the
/// segments a track overlaps, or a tenth of its whole-track VAS when it
/// overlaps no voiced segment. `instance_scores` is aligned with `instances`.
std::vector<double> score_all_tracks(const std::vector<SpeechFaceInstance>& instances,
                                     const std::vector<double>& instance_scores, const std::vector<FaceTrack>& tracks,
                                     const CamVolume& cams, double fps);

struct BoxScores {
  std::vector<LabeledScore> scores;
  std::vector<std::string> misaligned;  // tracks without a ground-truth record
};

/// Every face box inherits its track's score; a box is positive when its
/// frame lies in one of the track's speaking ranges.
BoxScores expand_to_boxes(const std::vector<double>& track_scores, const std::vector<FaceTrack>& tracks,
                          const std::vector<TrackLabel>& labels);

/// Mann-Whitney area under the ROC curve, ties counting one half.
double auroc(const std::vector<LabeledScore>& scores);
double auroc(const std::vector<double>& scores, const std::vector<bool>& labels);

/// (FPR, TPR) corner points, one per distinct threshold, from (0,0) to (1,1).
std::vector<std::pair<double, double>> roc_points(const std::vector<LabeledScore>& scores);

/// Background-detection auROC: label = background, score = distance to the
/// nearest profile. Tracks without ground truth are skipped.
double background_auroc(const std::vector<TrackScore>& scores, const std::vector<TrackLabel>& labels);

struct GtBaseline {
  std::vector<CharacterProfile> profiles;
  std::vector<TrackScore> track_scores;
  double auroc = 0.0;
  std::vector<std::string> warnings;
};

/// Upper-bound reference: one profile per annotated non-background character,
/// the normalized mean of all of its track embeddings.
GtBaseline gt_profile_baseline(const std::vector<TrackLabel>& labels, const std::vector<FaceTrack>& tracks);

}  // namespace avp
