#include "avp/profile_matcher.hpp"

#include <algorithm>
#include <cmath>

#include "avp/error.hpp"

namespace avp {

ProfileSet build_profiles(const HciSet& hci, const InstanceEmbeddings& embeddings, const ClusterParams& params) {
  ProfileSet profiles;
  profiles.members = hci.members();
  kernels::PointSet faces, speech;
  for (std::size_t i : profiles.members) {
    faces.push_back(embeddings.face.row(i));
    speech.push_back(embeddings.speech.row(i));
  }
  profiles.face_model = fit(faces, params);
  profiles.speech_model = fit(speech, params);

  const std::size_t L = profiles.face_clusters();
  const std::size_t B = profiles.speech_clusters();
  std::vector<std::vector<std::size_t>> joint(L, std::vector<std::size_t>(B, 0));
  std::vector<std::size_t> speech_size(B, 0);
  for (std::size_t r = 0; r < profiles.members.size(); ++r) {
    const int b = profiles.speech_model.labels[r];
    if (b == kNoise) continue;
    ++speech_size[static_cast<std::size_t>(b)];
    const int l = profiles.face_model.labels[r];
    if (l != kNoise) ++joint[static_cast<std::size_t>(l)][static_cast<std::size_t>(b)];
  }
  profiles.co_occurrence.assign(L, std::vector<double>(B, 0.0));
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t b = 0; b < B; ++b)
      if (speech_size[b] > 0)
        profiles.co_occurrence[l][b] = static_cast<double>(joint[l][b]) / static_cast<double>(speech_size[b]);
  return profiles;
}

double profile_matching_score(const std::vector<std::vector<double>>& co_occurrence,
                              const MembershipVector& speech_membership, const MembershipVector& face_membership) {
  if (co_occurrence.size() != face_membership.size()) throw Error("face membership does not match the profile table");
  double score = 0.0;
  for (std::size_t l = 0; l < co_occurrence.size(); ++l) {
    const auto& row = co_occurrence[l];
    if (row.size() != speech_membership.size()) throw Error("speech membership does not match the profile table");
    // P(v in V_l) by total probability over the speech clusters.
    double speech_in_profile = 0.0;
    for (std::size_t b = 0; b < row.size(); ++b) speech_in_profile += row[b] * speech_membership[b];
    score += speech_in_profile * face_membership[l];
  }
  return std::clamp(score, 0.0, 1.0);
}

std::optional<double> pms(std::size_t index, const ProfileSet& profiles, const InstanceEmbeddings& embeddings) {
  if (profiles.sentinel()) return std::nullopt;
  return profile_matching_score(profiles.co_occurrence, soft_membership(profiles.speech_model, embeddings.speech.row(index)),
                                soft_membership(profiles.face_model, embeddings.face.row(index)));
}

double alpha(std::size_t iter) {
  if (iter < 1) throw Error("iteration index must be at least 1");
  return 1.0 - std::pow(0.95, static_cast<double>(iter));
}

namespace {

// PMS for every instance under one frozen profile set, in parallel.
std::vector<std::optional<double>> score_all(const ProfileSet& profiles, const InstanceEmbeddings& embeddings) {
  const std::size_t n = embeddings.face.size();
  std::vector<std::optional<double>> out(n);
  if (profiles.sentinel()) return out;
  const auto face = soft_membership_batch(profiles.face_model, embeddings.face);
  const auto speech = soft_membership_batch(profiles.speech_model, embeddings.speech);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out[ui] = profile_matching_score(profiles.co_occurrence, speech[ui], face[ui]);
  }
  return out;
}

double fuse(double a, const std::optional<double>& pms_value, double vas) {
  return pms_value ? a * *pms_value + (1.0 - a) * vas : vas;
}

}  // namespace

MatchResult iterate(std::vector<SpeechFaceInstance> instances, const InstanceEmbeddings& embeddings,
                    const MatcherParams& params) {
  if (embeddings.face.size() != instances.size() || embeddings.speech.size() != instances.size())
    throw Error("instance embeddings do not match the instance list");
  if (params.max_iters < 1) throw Error("max_iters must be at least 1");

  MatchResult result;
  result.initial_hci = select_hci(instances, params.tau);
  result.hci = result.initial_hci;
  for (auto& inst : instances) {
    inst.pms.reset();
    inst.fused = inst.vas;
  }
  if (result.hci.empty()) {
    result.warnings.push_back("no high-confidence instances at tau; profile matching skipped");
    result.profiles = build_profiles(result.hci, embeddings, params.cluster);
    result.instances = std::move(instances);
    return result;
  }

  std::vector<std::optional<double>> last_pms;
  double last_alpha = 0.0;
  bool stale_profiles = false;
  for (std::size_t iter = 1; iter <= params.max_iters; ++iter) {
    result.profiles = build_profiles(result.hci, embeddings, params.cluster);
    const double a = alpha(iter);
    last_pms = score_all(result.profiles, embeddings);
    last_alpha = a;

    IterationRecord record;
    record.iter = iter;
    record.alpha = a;
    record.instance_scores.resize(instances.size());
    std::vector<std::size_t> admitted;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const double score = fuse(a, last_pms[i], instances[i].vas);
      record.instance_scores[i] = score;
      if (!result.hci.contains(i) && score > params.delta) admitted.push_back(i);
    }
    for (std::size_t i : admitted) result.hci.insert(i);
    record.added_count = admitted.size();
    record.hci_size = result.hci.size();
    result.trace.push_back(std::move(record));
    stale_profiles = !admitted.empty();
    if (admitted.empty()) break;
  }

  // Stopped on max_iters while still growing: profiles must reflect the final set.
  if (stale_profiles) {
    result.profiles = build_profiles(result.hci, embeddings, params.cluster);
    last_pms = score_all(result.profiles, embeddings);
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    instances[i].pms = last_pms[i];
    instances[i].fused = fuse(last_alpha, last_pms[i], instances[i].vas);
  }
  result.instances = std::move(instances);
  return result;
}

}  // namespace avp
