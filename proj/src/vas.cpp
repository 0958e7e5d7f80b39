#include "avp/vas.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <unordered_map>

#include "avp/error.hpp"

namespace avp {

bool HciSet::insert(std::size_t index) {
  if (index >= contains_.size()) contains_.resize(index + 1, false);
  if (contains_[index]) return false;
  contains_[index] = true;
  members_.push_back(index);
  return true;
}

RoiAccumulator roi_accumulate(std::span<const float> cam_frame, std::size_t height, std::size_t width,
                              const Box& box) {
  if (!(box.x2 > box.x1) || !(box.y2 > box.y1)) throw Error("degenerate box");
  RoiAccumulator acc;
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  for (std::size_t r = 0; r < height; ++r) {
    const double cy = (static_cast<double>(r) + 0.5) / h;
    if (cy < box.y1 || cy >= box.y2) continue;
    for (std::size_t c = 0; c < width; ++c) {
      const double cx = (static_cast<double>(c) + 0.5) / w;
      if (cx < box.x1 || cx >= box.x2) continue;
      acc.sum += cam_frame[r * width + c];
      ++acc.count;
    }
  }
  if (acc.count > 0) return acc;

  // Box falls between cell centers: use the nearest one, lower index on ties.
  const double bx = 0.5 * (box.x1 + box.x2);
  const double by = 0.5 * (box.y1 + box.y2);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_cell = 0;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double dx = (static_cast<double>(c) + 0.5) / w - bx;
      const double dy = (static_cast<double>(r) + 0.5) / h - by;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        best_cell = r * width + c;
      }
    }
  }
  return {static_cast<double>(cam_frame[best_cell]), 1};
}

double roi_mean(std::span<const float> cam_frame, std::size_t height, std::size_t width, const Box& box) {
  const auto acc = roi_accumulate(cam_frame, height, width, box);
  return acc.sum / static_cast<double>(acc.count);
}

std::size_t cam_frame_index(std::int64_t video_frame, double video_fps, const CamVolume& cams) {
  const double t = (static_cast<double>(video_frame) + 0.5) / video_fps;
  const auto idx = static_cast<std::int64_t>(std::floor(t * cams.fps));
  return static_cast<std::size_t>(std::clamp<std::int64_t>(idx, 0, std::int64_t{cams.frames} - 1));
}

namespace {

double accumulate_frames(const FaceTrack& track, std::int64_t first, std::int64_t last, const CamVolume& cams,
                         double fps) {
  RoiAccumulator total;
  for (std::int64_t f = first; f <= last; ++f) {
    const auto acc = roi_accumulate(cams.frame(cam_frame_index(f, fps, cams)), cams.height, cams.width,
                                    track.box_at(f));
    total.sum += acc.sum;
    total.count += acc.count;
  }
  if (total.count == 0) throw Error("track " + track.track_id + " has no frames in the scoring window");
  return total.sum / static_cast<double>(total.count);
}

}  // namespace

double vas_score(const FaceTrack& track, const VoicedSegment& segment, const CamVolume& cams, double fps) {
  // Frames whose [f/fps, (f+1)/fps) interval meets the segment.
  std::int64_t first = std::max<std::int64_t>(
      track.frame_start, static_cast<std::int64_t>(std::floor(segment.start_s * fps)) - 1);
  std::int64_t last = std::min<std::int64_t>(track.frame_end,
                                             static_cast<std::int64_t>(std::ceil(segment.end_s * fps)) + 1);
  while (first <= last && !(frame_end_time(first, fps) > segment.start_s)) ++first;
  while (last >= first && !(frame_start_time(last, fps) < segment.end_s)) --last;
  if (first > last) throw Error("track " + track.track_id + " does not overlap segment " + segment.segment_id);
  return accumulate_frames(track, first, last, cams, fps);
}

double whole_track_vas(const FaceTrack& track, const CamVolume& cams, double fps) {
  return accumulate_frames(track, track.frame_start, track.frame_end, cams, fps);
}

std::vector<SpeechFaceInstance> build_instances(const std::vector<VoicedSegment>& segments,
                                                const std::vector<FaceTrack>& tracks, const CamVolume& cams,
                                                double fps) {
  std::unordered_map<std::string, std::size_t> track_index;
  for (std::size_t i = 0; i < tracks.size(); ++i) track_index.emplace(tracks[i].track_id, i);

  std::vector<SpeechFaceInstance> instances;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto ids = overlap_tracks(segments[s], tracks, fps);
    for (const auto& id : ids) {
      SpeechFaceInstance inst;
      inst.segment_id = segments[s].segment_id;
      inst.track_id = id;
      inst.segment_index = s;
      inst.track_index = track_index.at(id);
      inst.k_count = ids.size();
      instances.push_back(std::move(inst));
    }
  }

  const auto n = static_cast<std::ptrdiff_t>(instances.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& inst = instances[static_cast<std::size_t>(i)];
    try {
      inst.vas = vas_score(tracks[inst.track_index], segments[inst.segment_index], cams, fps);
    } catch (...) {
#pragma omp critical(avp_vas_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return instances;
}

HciSet select_hci(const std::vector<SpeechFaceInstance>& instances, double tau) {
  HciSet hci(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i)
    if (instances[i].k_count == 1 && instances[i].vas > tau) hci.insert(i);
  return hci;
}

}  // namespace avp
