#include "avp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>

#include "avp/error.hpp"
#include "avp/kernels.hpp"

namespace avp::synth {

using nlohmann::json;

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("invalid synth config: ") + what);
  };
  require(num_characters >= 1, "num_characters must be at least 1");
  require(segments_per_character >= 1, "segments_per_character must be at least 1");
  require(face_dim >= 2 && speech_dim >= 2, "embedding dims must be at least 2");
  require(noise_sigma >= 0.0, "noise_sigma must be non-negative");
  require(cam_height >= 1 && cam_width >= 1, "cam grid must be non-empty");
  require(bump_low >= 0.0 && bump_high <= 1.0, "bump values must lie in [0,1]");
  require(bump_high > bump_low, "bump_high must exceed bump_low");
  require(cam_noise >= 0.0, "cam_noise must be non-negative");
  require(cam_confusion >= 0.0 && cam_confusion <= 1.0, "cam_confusion must lie in [0,1]");
  require(multi_face_fraction >= 0.0 && multi_face_fraction <= 1.0, "multi_face_fraction must lie in [0,1]");
  require(fps > 0.0, "fps must be positive");
}

SynthConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error("invalid synth config: expected an object");
  SynthConfig c;
  auto read = [&](const char* key, auto& slot) {
    if (!doc.contains(key)) return;
    try {
      doc.at(key).get_to(slot);
    } catch (const json::exception&) {
      throw Error(std::string("invalid synth config: malformed field ") + key);
    }
  };
  read("num_characters", c.num_characters);
  read("num_background", c.num_background);
  read("segments_per_character", c.segments_per_character);
  read("face_dim", c.face_dim);
  read("speech_dim", c.speech_dim);
  read("noise_sigma", c.noise_sigma);
  if (doc.contains("cam_grid")) {
    const auto grid = doc["cam_grid"];
    if (!grid.is_array() || grid.size() != 2) throw Error("invalid synth config: cam_grid must be [H, W]");
    c.cam_height = grid[0].get<std::size_t>();
    c.cam_width = grid[1].get<std::size_t>();
  }
  read("bump_high", c.bump_high);
  read("bump_low", c.bump_low);
  read("cam_noise", c.cam_noise);
  read("cam_confusion", c.cam_confusion);
  read("multi_face_fraction", c.multi_face_fraction);
  read("fps", c.fps);
  read("seed", c.seed);
  c.validate();
  return c;
}

json config_to_json(const SynthConfig& c) {
  return {{"num_characters", c.num_characters},
          {"num_background", c.num_background},
          {"segments_per_character", c.segments_per_character},
          {"face_dim", c.face_dim},
          {"speech_dim", c.speech_dim},
          {"noise_sigma", c.noise_sigma},
          {"cam_grid", {c.cam_height, c.cam_width}},
          {"bump_high", c.bump_high},
          {"bump_low", c.bump_low},
          {"cam_noise", c.cam_noise},
          {"cam_confusion", c.cam_confusion},
          {"multi_face_fraction", c.multi_face_fraction},
          {"fps", c.fps},
          {"seed", c.seed}};
}

namespace {

using Rng = std::mt19937_64;

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      sq += x * x;
    }
  } while (sq == 0.0);
  const double norm = std::sqrt(sq);
  std::vector<float> out(dim);
  for (std::size_t k = 0; k < dim; ++k) out[k] = static_cast<float>(v[k] / norm);
  return out;
}

// Identities on the unit sphere at least `min_sep` apart.
std::vector<std::vector<float>> sample_identities(Rng& rng, std::size_t count, std::size_t dim, double min_sep) {
  constexpr int kMaxAttempts = 1000;
  std::vector<std::vector<float>> out;
  for (std::size_t i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      auto v = random_unit(rng, dim);
      const bool separated = std::all_of(out.begin(), out.end(),
                                         [&](const auto& o) { return kernels::euclidean(v, o) >= min_sep; });
      if (separated) {
        out.push_back(std::move(v));
        placed = true;
      }
    }
    if (!placed) throw Error("identity separation rejected after 1000 attempts");
  }
  return out;
}

std::vector<float> noisy(Rng& rng, const std::vector<float>& identity, double sigma) {
  if (sigma == 0.0) return identity;
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<double> v(identity.size());
  double sq = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = identity[k] + normal(rng);
    sq += v[k] * v[k];
  }
  const double norm = std::sqrt(sq);
  std::vector<float> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(v[k] / norm);
  return out;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return p > 0.0 && uniform(rng, 0.0, 1.0) < p; }
std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

// Face box in the left (side 0) or right (side 1) half of the frame.
Box random_box(Rng& rng, int side) {
  const double w = uniform(rng, 0.18, 0.30);
  const double h = uniform(rng, 0.25, 0.40);
  const double x1 = 0.5 * side + uniform(rng, 0.02, 0.48 - w);
  const double y1 = uniform(rng, 0.05, 0.95 - h);
  return {x1, y1, x1 + w, y1 + h};
}

struct PendingTrack {
  std::int64_t frame_start = 0;
  std::int64_t frame_end = 0;
  Box box;
  std::size_t identity = 0;
  bool speaker = false;
};

struct Turn {
  double start = 0, end = 0;
  std::size_t speaker = 0;
  std::size_t speaker_track = 0;
  std::optional<std::size_t> listener_track;
};

}  // namespace

Scenario generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Scenario sc;
  sc.config = config;
  const std::size_t n_chars = config.num_characters;
  const std::size_t n_bg = config.num_background;
  const double fps = config.fps;

  sc.truth.face_identities = sample_identities(rng, n_chars + n_bg, config.face_dim, 4.0 * config.noise_sigma);
  sc.truth.speech_identities = sample_identities(rng, n_chars, config.speech_dim, 4.0 * config.noise_sigma);

  std::vector<PendingTrack> pending;
  std::vector<Turn> turns;
  std::vector<std::size_t> quota(n_chars, config.segments_per_character);
  std::size_t background_shown = 0;
  double t = 0.5;

  auto add_gap = [&](bool force_background) {
    const double g0 = t;
    const double g1 = t + uniform(rng, 0.4, 1.2);
    const auto fs = static_cast<std::int64_t>(std::ceil((g0 + 0.05) * fps));
    const auto fe = static_cast<std::int64_t>(std::floor((g1 - 0.05) * fps)) - 1;
    const bool background = n_bg > 0 && (force_background || chance(rng, 0.4));
    const bool silent_main = !background && chance(rng, 0.3);
    if ((background || silent_main) && fe - fs >= 2) {
      PendingTrack p{fs, fe, random_box(rng, static_cast<int>(pick(rng, 2))), 0, false};
      p.identity = background ? n_chars + (background_shown < n_bg ? background_shown : pick(rng, n_bg)) : pick(rng, n_chars);
      if (background) ++background_shown;
      pending.push_back(p);
    }
    if (chance(rng, 0.3)) sc.shots.push_back(0.5 * (g0 + g1));
    t = g1;
  };

  while (std::any_of(quota.begin(), quota.end(), [](std::size_t q) { return q > 0; })) {
    std::vector<std::size_t> open;
    for (std::size_t c = 0; c < n_chars; ++c)
      if (quota[c] > 0) open.push_back(c);
    const std::size_t speaker = open[pick(rng, open.size())];
    const std::size_t pieces = std::min<std::size_t>(1 + pick(rng, 3), quota[speaker]);
    quota[speaker] -= pieces;

    Turn turn;
    turn.speaker = speaker;
    turn.start = t;
    turn.end = t + static_cast<double>(pieces - 1) + uniform(rng, 0.4, 1.0);
    if (pieces >= 2 && chance(rng, 0.3)) {
      // Boundaries on whole-second offsets coincide with the 1 s split points.
      sc.shots.push_back(turn.start + static_cast<double>(1 + pick(rng, pieces - 1)));
    }
    sc.vad.push_back({turn.start, turn.end});

    const auto fs = static_cast<std::int64_t>(std::floor(turn.start * fps));
    const auto fe = static_cast<std::int64_t>(std::ceil(turn.end * fps)) - 1;
    const int side = static_cast<int>(pick(rng, 2));
    turn.speaker_track = pending.size();
    pending.push_back({fs, fe, random_box(rng, side), speaker, true});
    if (n_chars >= 2 && chance(rng, config.multi_face_fraction)) {
      std::size_t listener = pick(rng, n_chars - 1);
      if (listener >= speaker) ++listener;
      turn.listener_track = pending.size();
      pending.push_back({fs, fe, random_box(rng, 1 - side), listener, false});
    }
    turns.push_back(turn);
    t = turn.end;
    add_gap(background_shown < n_bg);
  }
  while (background_shown < n_bg) add_gap(true);
  std::sort(sc.shots.begin(), sc.shots.end());
  sc.shots.erase(std::unique(sc.shots.begin(), sc.shots.end()), sc.shots.end());

  sc.segments = partition_voiced(sc.vad, sc.shots, 1.0);

  // Tracks and face embeddings.
  std::vector<std::string> face_ids;
  std::vector<float> face_values;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto& p = pending[i];
    FaceTrack track;
    char id[32];
    std::snprintf(id, sizeof id, "trk_%05zu", i);
    track.track_id = id;
    track.frame_start = p.frame_start;
    track.frame_end = p.frame_end;
    track.boxes.assign(static_cast<std::size_t>(p.frame_end - p.frame_start + 1), p.box);
    track.embedding = noisy(rng, sc.truth.face_identities[p.identity], config.noise_sigma);
    face_ids.push_back(track.track_id);
    face_values.insert(face_values.end(), track.embedding.begin(), track.embedding.end());

    const bool background = p.identity >= n_chars;
    sc.truth.track_identity.push_back(p.identity);
    sc.truth.track_background.push_back(background);
    TrackLabel label;
    label.track_id = track.track_id;
    label.character = background ? "bg_" + std::to_string(p.identity - n_chars) : "char_" + std::to_string(p.identity);
    label.background = background;
    if (p.speaker) label.speaking_frames.emplace_back(p.frame_start, p.frame_end);
    sc.labels.push_back(std::move(label));
    sc.tracks.push_back(std::move(track));
  }
  sc.face_embeddings = EmbeddingMatrix(config.face_dim, std::move(face_ids), std::move(face_values));

  // Speech embeddings, one per segment, and the segment -> turn map.
  std::vector<std::string> speech_ids;
  std::vector<float> speech_values;
  std::vector<std::size_t> segment_turn(sc.segments.size());
  {
    std::size_t turn = 0;
    for (std::size_t s = 0; s < sc.segments.size(); ++s) {
      const double mid = 0.5 * (sc.segments[s].start_s + sc.segments[s].end_s);
      while (turn + 1 < turns.size() && mid >= turns[turn].end) ++turn;
      segment_turn[s] = turn;
      const auto& tr = turns[turn];
      sc.truth.segment_speaker.push_back(tr.speaker);
      sc.truth.segment_speaker_track.push_back(sc.tracks[tr.speaker_track].track_id);
      const auto e = noisy(rng, sc.truth.speech_identities[tr.speaker], config.noise_sigma);
      speech_ids.push_back(sc.segments[s].segment_id);
      speech_values.insert(speech_values.end(), e.begin(), e.end());
    }
  }
  sc.speech_embeddings = EmbeddingMatrix(config.speech_dim, std::move(speech_ids), std::move(speech_values));

  // CAM volume: low everywhere plus noise, the bump on the active face.
  const double duration = t + 0.5;
  CamVolume& cams = sc.cams;
  cams.frames = static_cast<std::uint32_t>(std::ceil(duration * fps)) + 1;
  cams.height = static_cast<std::uint32_t>(config.cam_height);
  cams.width = static_cast<std::uint32_t>(config.cam_width);
  cams.fps = static_cast<float>(fps);
  cams.values.assign(std::size_t{cams.frames} * cams.height * cams.width, 0.0f);
  std::normal_distribution<double> cam_noise(0.0, config.cam_noise > 0.0 ? config.cam_noise : 1.0);
  auto cell_value = [&](double base) {
    const double v = config.cam_noise > 0.0 ? base + cam_noise(rng) : base;
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
  };
  for (auto& v : cams.values) v = cell_value(config.bump_low);

  const std::size_t H = cams.height, W = cams.width;
  for (std::size_t s = 0; s < sc.segments.size(); ++s) {
    const auto& seg = sc.segments[s];
    const auto& tr = turns[segment_turn[s]];
    std::optional<std::size_t> target = tr.speaker_track;
    if (chance(rng, config.cam_confusion)) target = tr.listener_track;
    if (!target) continue;
    const FaceTrack& track = sc.tracks[*target];
    for (std::int64_t f = track.frame_start; f <= track.frame_end; ++f) {
      const double center = (static_cast<double>(f) + 0.5) / fps;
      if (center < seg.start_s || center >= seg.end_s) continue;
      const Box& box = track.box_at(f);
      float* frame = cams.values.data() + static_cast<std::size_t>(f) * H * W;
      for (std::size_t r = 0; r < H; ++r) {
        const double cy = (static_cast<double>(r) + 0.5) / static_cast<double>(H);
        if (cy < box.y1 || cy >= box.y2) continue;
        for (std::size_t c = 0; c < W; ++c) {
          const double cx = (static_cast<double>(c) + 0.5) / static_cast<double>(W);
          if (cx >= box.x1 && cx < box.x2) frame[r * W + c] = cell_value(config.bump_high);
        }
      }
    }
  }
  return sc;
}

Manifest write_dataset(const Scenario& sc, const fs::path& dir) {
  fs::create_directories(dir);
  write_vad(dir / "vad.jsonl", sc.vad);
  write_shots(dir / "shots.json", sc.shots);
  write_tracks(dir / "tracks.jsonl", sc.tracks);
  write_embeddings(dir / "face_embeddings.avem", sc.face_embeddings);
  write_embeddings(dir / "speech_embeddings.avem", sc.speech_embeddings);
  write_cams(dir / "cams.avcm", sc.cams);
  write_labels(dir / "labels.jsonl", sc.labels);

  Manifest relative;
  relative.video_id = "synth_" + std::to_string(sc.config.seed);
  relative.fps = sc.config.fps;
  relative.vad = "vad.jsonl";
  relative.shots = "shots.json";
  relative.tracks = "tracks.jsonl";
  relative.face_embeddings = "face_embeddings.avem";
  relative.speech_embeddings = "speech_embeddings.avem";
  relative.cams = "cams.avcm";
  relative.labels = fs::path("labels.jsonl");
  write_manifest(dir / "manifest.json", relative);
  {
    std::ofstream out(dir / "synth.json", std::ios::trunc);
    out << config_to_json(sc.config).dump(2) << '\n';
  }
  return load_manifest(dir / "manifest.json");
}

NearestIdentityAccuracy nearest_identity_accuracy(const Scenario& sc) {
  auto nearest = [](std::span<const float> v, const std::vector<std::vector<float>>& ids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double d = kernels::euclidean(v, ids[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  NearestIdentityAccuracy acc;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < sc.tracks.size(); ++i)
    ok += nearest(sc.tracks[i].embedding, sc.truth.face_identities) == sc.truth.track_identity[i];
  acc.face = sc.tracks.empty() ? 1.0 : static_cast<double>(ok) / static_cast<double>(sc.tracks.size());
  ok = 0;
  for (std::size_t s = 0; s < sc.segments.size(); ++s)
    ok += nearest(sc.speech_embeddings.row(s), sc.truth.speech_identities) == sc.truth.segment_speaker[s];
  acc.speech = sc.segments.empty() ? 1.0 : static_cast<double>(ok) / static_cast<double>(sc.segments.size());
  return acc;
}

double oracle_pms(const std::vector<double>& face_membership, const std::vector<double>& speech_membership,
                  const std::vector<std::vector<double>>& co_occurrence) {
  if (co_occurrence.size() != face_membership.size()) throw Error("oracle_pms: dimension mismatch");
  double total = 0.0;
  for (std::size_t l = 0; l < face_membership.size(); ++l) {
    if (co_occurrence[l].size() != speech_membership.size()) throw Error("oracle_pms: dimension mismatch");
    for (std::size_t b = 0; b < speech_membership.size(); ++b)
      total += co_occurrence[l][b] * speech_membership[b] * face_membership[l];
  }
  return total;
}

double oracle_auroc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error("oracle_auroc: length mismatch");
  double wins = 0.0, ties = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) throw Error("degenerate label set");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) ties += 1.0;
    }
  }
  return (wins + 0.5 * ties) / (pos * neg);
}

}  // namespace avp::synth
