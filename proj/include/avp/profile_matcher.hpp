#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "avp/density_cluster.hpp"
#include "avp/kernels.hpp"
#include "avp/vas.hpp"

namespace avp {

struct MatcherParams {
  double tau = 0.7;     // VAS threshold for the initial high-confidence set
  double delta = 0.75;  // fused-score threshold for growing it
  std::size_t max_iters = 50;
  ClusterParams cluster;
};

/// Face and speech embedding of every instance, row i belonging to
/// instance i.
struct InstanceEmbeddings {
  kernels::PointSet face;
  kernels::PointSet speech;
};

/// Face clusters F_l and speech clusters V~_b fit on the current
/// high-confidence instances, plus the L x B table P(v in V_l | v in V~_b).
struct ProfileSet {
  ClusterModel face_model;
  ClusterModel speech_model;
  std::vector<std::size_t> members;  // instance index of each fitted row
  std::vector<std::vector<double>> co_occurrence;

  std::size_t face_clusters() const { return face_model.cluster_count(); }
  std::size_t speech_clusters() const { return speech_model.cluster_count(); }
  // No profile evidence: either modality produced no cluster.
  bool sentinel() const { return face_clusters() == 0 || speech_clusters() == 0; }
};

struct IterationRecord {
  std::size_t iter = 0;
  std::size_t hci_size = 0;  // after this iteration's additions
  double alpha = 0.0;
  std::size_t added_count = 0;
  std::vector<double> instance_scores;  // fused score of every instance under this iteration's profiles
};

using IterationTrace = std::vector<IterationRecord>;

ProfileSet build_profiles(const HciSet& hci, const InstanceEmbeddings& embeddings, const ClusterParams& params);

/// sum_l sum_b co[l][b] * speech[b] * face[l], clamped to [0,1].
double profile_matching_score(const std::vector<std::vector<double>>& co_occurrence,
                              const MembershipVector& speech_membership, const MembershipVector& face_membership);

/// PMS of instance `index`; nullopt when the profile set is a sentinel.
std::optional<double> pms(std::size_t index, const ProfileSet& profiles, const InstanceEmbeddings& embeddings);

/// 1 - 0.95^iter, the weight given to PMS at iteration `iter` (>= 1).
double alpha(std::size_t iter);

struct MatchResult {
  std::vector<SpeechFaceInstance> instances;  // pms and fused filled from the final profiles
  HciSet initial_hci;
  HciSet hci;
  ProfileSet profiles;
  IterationTrace trace;
  std::vector<std::string> warnings;
};

/// Iterative profile matching: seed with select_hci(tau), then repeatedly
/// rebuild profiles and admit every outside instance whose fused score
/// alpha * PMS + (1 - alpha) * VAS exceeds delta, while the set grows.
MatchResult iterate(std::vector<SpeechFaceInstance> instances, const InstanceEmbeddings& embeddings,
                    const MatcherParams& params);

}  // namespace avp
