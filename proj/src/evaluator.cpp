#include "avp/evaluator.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "avp/error.hpp"

namespace avp {

std::vector<double> score_all_tracks(const std::vector<SpeechFaceInstance>& instances,
                                     const std::vector<double>& instance_scores, const std::vector<FaceTrack>& tracks,
                                     const CamVolume& cams, double fps) {
  if (instance_scores.size() != instances.size()) throw Error("instance scores do not match instances");
  std::vector<std::optional<double>> best(tracks.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto& slot = best.at(instances[i].track_index);
    slot = slot ? std::max(*slot, instance_scores[i]) : instance_scores[i];
  }
  std::vector<double> out(tracks.size());
  for (std::size_t t = 0; t < tracks.size(); ++t)
    out[t] = best[t] ? *best[t] : whole_track_vas(tracks[t], cams, fps) / 10.0;
  return out;
}

BoxScores expand_to_boxes(const std::vector<double>& track_scores, const std::vector<FaceTrack>& tracks,
                          const std::vector<TrackLabel>& labels) {
  std::unordered_map<std::string, const TrackLabel*> by_id;
  for (const auto& l : labels) by_id.emplace(l.track_id, &l);
  BoxScores out;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& track = tracks[t];
    const auto it = by_id.find(track.track_id);
    if (it == by_id.end()) {
      out.misaligned.push_back(track.track_id);
      continue;
    }
    const auto& ranges = it->second->speaking_frames;
    for (std::int64_t f = track.frame_start; f <= track.frame_end; ++f) {
      const bool speaking =
          std::any_of(ranges.begin(), ranges.end(), [f](const auto& r) { return f >= r.first && f <= r.second; });
      out.scores.push_back({track.track_id + "#" + std::to_string(f), track_scores[t], speaking});
    }
  }
  return out;
}

double auroc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based, tie-averaged) ranks of the positives. Average ranks are
  // half-integers, so the sum is exact.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error("degenerate label set");
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double auroc(const std::vector<LabeledScore>& scores) {
  std::vector<double> s;
  std::vector<bool> l;
  s.reserve(scores.size());
  l.reserve(scores.size());
  for (const auto& x : scores) {
    s.push_back(x.score);
    l.push_back(x.label);
  }
  return auroc(s, l);
}

std::vector<std::pair<double, double>> roc_points(const std::vector<LabeledScore>& scores) {
  std::vector<LabeledScore> sorted(scores);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  const auto positives = static_cast<double>(std::count_if(sorted.begin(), sorted.end(), [](const auto& x) { return x.label; }));
  const double negatives = static_cast<double>(sorted.size()) - positives;
  if (positives == 0 || negatives == 0) throw Error("degenerate label set");

  std::vector<std::pair<double, double>> points{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      (sorted[j].label ? tp : fp) += 1.0;
      ++j;
    }
    points.emplace_back(fp / negatives, tp / positives);
    i = j;
  }
  return points;
}

double background_auroc(const std::vector<TrackScore>& scores, const std::vector<TrackLabel>& labels) {
  std::unordered_map<std::string, bool> background;
  for (const auto& l : labels) background.emplace(l.track_id, l.background);
  std::vector<LabeledScore> items;
  for (const auto& s : scores) {
    const auto it = background.find(s.track_id);
    if (it != background.end()) items.push_back({s.track_id, s.min_profile_distance, it->second});
  }
  return auroc(items);
}

GtBaseline gt_profile_baseline(const std::vector<TrackLabel>& labels, const std::vector<FaceTrack>& tracks) {
  if (labels.empty()) throw Error("ground truth required");
  std::unordered_map<std::string, const FaceTrack*> by_id;
  for (const auto& t : tracks) by_id.emplace(t.track_id, &t);

  GtBaseline out;
  std::map<std::string, std::vector<std::span<const float>>> by_character;
  for (const auto& l : labels) {
    if (l.background) continue;
    auto& rows = by_character[l.character];
    const auto it = by_id.find(l.track_id);
    if (it != by_id.end() && !it->second->embedding.empty()) rows.emplace_back(it->second->embedding);
  }
  for (const auto& [character, rows] : by_character) {
    if (rows.empty()) {
      out.warnings.push_back("character " + character + " has no tracks; skipped");
      continue;
    }
    CharacterProfile p;
    p.profile_id = character;
    p.face_mean = normalized_mean(rows);
    p.member_count = rows.size();
    out.profiles.push_back(std::move(p));
  }
  if (out.profiles.empty()) throw Error("ground truth has no speaking characters");
  for (const auto& t : tracks) {
    TrackScore s = score_track(t.embedding, out.profiles);
    s.track_id = t.track_id;
    out.track_scores.push_back(std::move(s));
  }
  out.auroc = background_auroc(out.track_scores, labels);
  return out;
}

}  // namespace avp
