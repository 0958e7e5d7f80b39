#include "avp/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "avp/error.hpp"
#include "avp/vas.hpp"

namespace avp {

using nlohmann::json;

void RunConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(tau)) throw Error("tau must lie in [0,1]");
  if (!unit(delta)) throw Error("delta must lie in [0,1]");
  if (!unit(beta)) throw Error("beta must lie in [0,1]");
  if (min_cluster_size < 2) throw Error("min_cluster_size must be at least 2");
  if (max_iters < 1) throw Error("max_iters must be at least 1");
  if (!(max_duration > 0.0)) throw Error("max_duration must be positive");
}

MatcherParams RunConfig::matcher() const {
  MatcherParams p;
  p.tau = tau;
  p.delta = delta;
  p.max_iters = max_iters;
  p.cluster.min_cluster_size = min_cluster_size;
  p.cluster.min_samples = min_samples;
  return p;
}

json RunConfig::to_json() const {
  return {{"tau", tau},
          {"delta", delta},
          {"beta", beta},
          {"min_cluster_size", min_cluster_size},
          {"min_samples", min_samples == 0 ? min_cluster_size : min_samples},
          {"max_iters", max_iters},
          {"max_duration", max_duration},
          {"seed", seed}};
}

Dataset load_dataset(const Manifest& manifest) {
  Dataset d;
  d.manifest = manifest;
  d.vad = load_vad(manifest.vad);
  d.shots = load_shots(manifest.shots);
  d.tracks = load_tracks(manifest.tracks);
  d.face_embeddings = load_embeddings(manifest.face_embeddings);
  d.speech_embeddings = load_embeddings(manifest.speech_embeddings);
  d.cams = load_cams(manifest.cams);
  if (manifest.labels) d.labels = load_labels(*manifest.labels);

  for (auto& t : d.tracks) {
    const auto row = d.face_embeddings.find(t.track_id);
    if (!row) throw Error("unmatched track " + t.track_id);
    const auto e = d.face_embeddings.row(*row);
    t.embedding.assign(e.begin(), e.end());
  }
  return d;
}

RunResult run_pipeline(const Dataset& d, const RunConfig& config) {
  config.validate();
  const double fps = d.manifest.fps;
  RunResult r;
  r.segments = partition_voiced(d.vad, d.shots, config.max_duration);

  std::vector<std::size_t> speech_row(r.segments.size());
  for (std::size_t s = 0; s < r.segments.size(); ++s) {
    const auto row = d.speech_embeddings.find(r.segments[s].segment_id);
    if (!row) throw Error("unmatched segment " + r.segments[s].segment_id);
    speech_row[s] = *row;
  }

  auto instances = build_instances(r.segments, d.tracks, d.cams, fps);
  for (const auto& inst : instances) {
    r.embeddings.face.push_back(d.tracks[inst.track_index].embedding);
    r.embeddings.speech.push_back(d.speech_embeddings.row(speech_row[inst.segment_index]));
  }
  // Keep dims defined for empty instance lists.
  if (instances.empty()) {
    r.embeddings.face.dim = d.face_embeddings.dim();
    r.embeddings.speech.dim = d.speech_embeddings.dim();
  }

  r.match = iterate(std::move(instances), r.embeddings, config.matcher());
  r.warnings = r.match.warnings;

  r.profiles = profile_means(r.match.profiles, r.embeddings);
  r.has_profiles = !r.profiles.empty();
  if (r.has_profiles) {
    r.track_scores = score_tracks(d.tracks, r.profiles, config.beta);
  } else {
    r.warnings.push_back("no character profiles; background classification left unset");
    for (const auto& t : d.tracks) {
      TrackScore s;
      s.track_id = t.track_id;
      s.low_confidence = t.length() < kMinConfidentTrackFrames;
      r.track_scores.push_back(std::move(s));
    }
  }
  return r;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<json> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("run artifact not found: " + path.string());
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(json::parse(line));
  return rows;
}

}  // namespace

void write_run_outputs(const RunResult& r, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto& instances = r.match.instances;
  {
    auto out = open_out(out_dir / "segments.jsonl");
    for (const auto& s : r.segments)
      out << json{{"segment_id", s.segment_id}, {"start_s", s.start_s}, {"end_s", s.end_s},
                  {"source_shot", s.source_shot}}
                 .dump()
          << '\n';
  }
  {
    auto out = open_out(out_dir / "instances.jsonl");
    for (const auto& i : instances)
      out << json{{"segment_id", i.segment_id}, {"track_id", i.track_id}, {"vas", i.vas}, {"k_count", i.k_count}}
                 .dump()
          << '\n';
  }
  {
    auto out = open_out(out_dir / "scores.jsonl");
    for (std::size_t k = 0; k < instances.size(); ++k) {
      const auto& i = instances[k];
      out << json{{"segment_id", i.segment_id}, {"track_id", i.track_id}, {"vas", i.vas},
                  {"pms", optional_json(i.pms)},   {"fused", optional_json(i.fused)},
                  {"in_hci", r.match.hci.contains(k)}}
                 .dump()
          << '\n';
    }
  }
  {
    auto out = open_out(out_dir / "hci.jsonl");
    for (std::size_t k : r.match.hci.members())
      out << json{{"segment_id", instances[k].segment_id}, {"track_id", instances[k].track_id},
                  {"seed", r.match.initial_hci.contains(k)}}
                 .dump()
          << '\n';
  }
  {
    json iterations = json::array();
    for (const auto& rec : r.match.trace)
      iterations.push_back({{"iter", rec.iter},
                            {"hci_size", rec.hci_size},
                            {"alpha", rec.alpha},
                            {"added_count", rec.added_count},
                            {"instance_scores", rec.instance_scores}});
    json trace = {{"initial_hci_size", r.match.initial_hci.size()},
                  {"iterations", iterations},
                  {"warnings", r.warnings}};
    open_out(out_dir / "trace.json") << trace.dump(2) << '\n';
  }
  {
    json profiles = json::array();
    for (const auto& p : r.profiles)
      profiles.push_back({{"profile_id", p.profile_id},
                          {"member_count", p.member_count},
                          {"face_mean", p.face_mean},
                          {"speech_mean", p.speech_mean}});
    json doc = {{"face_clusters", r.match.profiles.face_clusters()},
                {"speech_clusters", r.match.profiles.speech_clusters()},
                {"co_occurrence", r.match.profiles.co_occurrence},
                {"profiles", profiles}};
    open_out(out_dir / "profiles.json") << doc.dump(2) << '\n';
  }
  {
    std::vector<std::string> face_rows, speech_rows;
    for (std::size_t k : r.match.profiles.members) {
      face_rows.push_back(instances[k].track_id);
      speech_rows.push_back(instances[k].segment_id);
    }
    json doc = {{"face", cluster_report(r.match.profiles.face_model, face_rows)},
                {"speech", cluster_report(r.match.profiles.speech_model, speech_rows)}};
    open_out(out_dir / "clusters.json") << doc.dump(2) << '\n';
  }
  {
    auto out = open_out(out_dir / "background.jsonl");
    for (const auto& s : r.track_scores) {
      json row = {{"track_id", s.track_id},
                  {"min_profile_distance", r.has_profiles ? json(s.min_profile_distance) : json(nullptr)},
                  {"is_background", s.is_background ? json(*s.is_background) : json(nullptr)}};
      out << row.dump() << '\n';
    }
  }
}

namespace {

const std::vector<TrackLabel>& require_labels(const Dataset& d) {
  if (!d.labels) throw Error("ground truth required");
  return *d.labels;
}

struct ActiveSpeakerScores {
  double final_auroc = 0.0;
  std::vector<double> per_iteration;
  std::vector<LabeledScore> final_boxes;
  std::vector<std::string> misaligned;
};

ActiveSpeakerScores active_speaker(const Dataset& d, const std::vector<SpeechFaceInstance>& instances,
                                   const std::vector<double>& final_scores,
                                   const std::vector<std::vector<double>>& iteration_scores) {
  const auto& labels = require_labels(d);
  auto box_auroc = [&](const std::vector<double>& instance_scores, BoxScores* keep) {
    auto boxes = expand_to_boxes(score_all_tracks(instances, instance_scores, d.tracks, d.cams, d.manifest.fps),
                                 d.tracks, labels);
    const double a = auroc(boxes.scores);
    if (keep) *keep = std::move(boxes);
    return a;
  };
  ActiveSpeakerScores out;
  std::vector<double> vas;
  for (const auto& i : instances) vas.push_back(i.vas);
  out.per_iteration.push_back(box_auroc(vas, nullptr));
  for (const auto& s : iteration_scores) out.per_iteration.push_back(box_auroc(s, nullptr));
  BoxScores final_boxes;
  out.final_auroc = box_auroc(final_scores, &final_boxes);
  out.final_boxes = std::move(final_boxes.scores);
  out.misaligned = std::move(final_boxes.misaligned);
  return out;
}

EvalReport assemble(const Dataset& d, const ActiveSpeakerScores& as, const std::vector<TrackScore>& track_scores,
                    bool has_profiles) {
  const auto& labels = require_labels(d);
  if (!has_profiles) throw Error("no character profiles");
  EvalReport report;
  report.active_speaker_auroc = as.final_auroc;
  report.per_iteration_aurocs = as.per_iteration;
  report.vas_only_auroc = as.per_iteration.front();
  report.background_auroc = background_auroc(track_scores, labels);
  report.gt_baseline_auroc = gt_profile_baseline(labels, d.tracks).auroc;
  report.misalignments = as.misaligned;
  report.active_speaker_roc = roc_points(as.final_boxes);
  std::unordered_map<std::string, bool> background;
  for (const auto& l : labels) background.emplace(l.track_id, l.background);
  std::vector<LabeledScore> bg;
  for (const auto& s : track_scores) {
    const auto it = background.find(s.track_id);
    if (it != background.end()) bg.push_back({s.track_id, s.min_profile_distance, it->second});
  }
  report.background_roc = roc_points(bg);
  return report;
}

}  // namespace

EvalReport evaluate(const Dataset& d, const RunResult& r) {
  require_labels(d);
  std::vector<double> final_scores;
  for (const auto& i : r.match.instances) final_scores.push_back(i.fused.value_or(i.vas));
  std::vector<std::vector<double>> iteration_scores;
  for (const auto& rec : r.match.trace) iteration_scores.push_back(rec.instance_scores);
  return assemble(d, active_speaker(d, r.match.instances, final_scores, iteration_scores), r.track_scores,
                  r.has_profiles);
}

EvalReport evaluate_outputs(const Dataset& d, const fs::path& dir) {
  require_labels(d);
  std::unordered_map<std::string, std::size_t> track_index;
  for (std::size_t t = 0; t < d.tracks.size(); ++t) track_index.emplace(d.tracks[t].track_id, t);

  std::vector<SpeechFaceInstance> instances;
  std::vector<double> final_scores;
  for (const json& row : read_lines(dir / "scores.jsonl")) {
    SpeechFaceInstance inst;
    inst.segment_id = row.at("segment_id").get<std::string>();
    inst.track_id = row.at("track_id").get<std::string>();
    const auto it = track_index.find(inst.track_id);
    if (it == track_index.end()) throw Error("scores.jsonl references unknown track " + inst.track_id);
    inst.track_index = it->second;
    inst.vas = row.at("vas").get<double>();
    final_scores.push_back(row.at("fused").is_null() ? inst.vas : row.at("fused").get<double>());
    instances.push_back(std::move(inst));
  }

  std::vector<std::vector<double>> iteration_scores;
  if (fs::exists(dir / "trace.json")) {
    std::ifstream in(dir / "trace.json");
    const json trace = json::parse(in);
    for (const auto& rec : trace.at("iterations"))
      iteration_scores.push_back(rec.at("instance_scores").get<std::vector<double>>());
  }

  std::vector<TrackScore> track_scores;
  bool has_profiles = true;
  for (const json& row : read_lines(dir / "background.jsonl")) {
    TrackScore s;
    s.track_id = row.at("track_id").get<std::string>();
    if (row.at("min_profile_distance").is_null()) {
      has_profiles = false;
    } else {
      s.min_profile_distance = row.at("min_profile_distance").get<double>();
    }
    track_scores.push_back(std::move(s));
  }
  return assemble(d, active_speaker(d, instances, final_scores, iteration_scores), track_scores, has_profiles);
}

void write_eval_outputs(const Dataset& d, const EvalReport& report, const fs::path& results_dir,
                        const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json doc = {{"video_id", d.manifest.video_id},
              {"results_dir", results_dir.string()},
              {"active_speaker_auroc", report.active_speaker_auroc},
              {"vas_only_auroc", report.vas_only_auroc},
              {"background_auroc", report.background_auroc},
              {"gt_baseline_auroc", optional_json(report.gt_baseline_auroc)},
              {"per_iteration_aurocs", report.per_iteration_aurocs},
              {"misalignments", report.misalignments}};
  open_out(out_dir / "eval.json") << doc.dump(2) << '\n';
  auto csv = open_out(out_dir / "roc_points.csv");
  csv << std::setprecision(17) << "curve,fpr,tpr\n";
  for (const auto& [fpr, tpr] : report.active_speaker_roc) csv << "active_speaker," << fpr << ',' << tpr << '\n';
  for (const auto& [fpr, tpr] : report.background_roc) csv << "background," << fpr << ',' << tpr << '\n';
}

}  // namespace avp
