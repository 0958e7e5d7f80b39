#pragma once

// Hierarchical density-based clustering: core distances, mutual
// reachability MST, single-linkage hierarchy condensed at a minimum cluster
// size, excess-of-mass selection, GLOSH outlier scores and soft membership
// for unseen points.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "avp/kernels.hpp"
#include "json.hpp"

namespace avp {

struct ClusterParams {
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 0;  // 0 means "same as min_cluster_size"

  std::size_t effective_min_samples() const { return min_samples == 0 ? min_cluster_size : min_samples; }
};

inline constexpr int kNoise = -1;

// Distances are floored here before inversion so duplicate points get a
// finite density.
inline constexpr double kMinLevel = 1e-12;

inline double lambda_of(double level) { return 1.0 / (level > kMinLevel ? level : kMinLevel); }

/// Node of the condensed tree. Node 0 is the root.
struct CondensedNode {
  int parent = -1;
  double birth_lambda = 0.0;
  double lambda_max = 0.0;  // largest point lambda in the subtree
  double stability = 0.0;
  std::size_t size = 0;
  std::vector<std::size_t> children;
};

struct ClusterInfo {
  std::size_t node = 0;
  double lambda_max = 0.0;
  std::vector<std::size_t> members;  // fitted point indices, ascending
};

struct ClusterModel {
  ClusterParams params;
  kernels::PointSet points;
  std::vector<double> core;
  std::vector<double> departure_level;   // distance at which each point leaves the hierarchy
  std::vector<std::size_t> departure_node;
  std::vector<CondensedNode> nodes;
  std::vector<ClusterInfo> clusters;
  std::vector<int> labels;
  std::vector<double> glosh;
  std::vector<kernels::MstEdge> mst;
  bool single_cluster_fallback = false;

  std::size_t cluster_count() const { return clusters.size(); }
  std::size_t size() const { return labels.size(); }
  double departure_lambda(std::size_t i) const { return lambda_of(departure_level[i]); }
};

/// Per-cluster membership in [0,1]; the residual 1 - sum is noise mass.
using MembershipVector = std::vector<double>;

/// Fits the hierarchy. Returns an all-noise model (no clusters) when there
/// are fewer points than min_cluster_size. Requires min_cluster_size >= 2.
ClusterModel fit(const kernels::PointSet& points, const ClusterParams& params);

/// GLOSH outlier scores of the fitted points: 1 - lambda(p) / lambda_max(C)
/// with C the point's cluster, or the condensed node it fell out of when it
/// is noise.
const std::vector<double>& glosh_scores(const ClusterModel& model);

/// Membership of an unseen point in each cluster. A query attaches to
/// cluster l at level min over members p of max(core(q), d(q,p), level(p)),
/// where level(p) is p's departure distance; its raw membership is the ratio
/// of the attachment density to the cluster's peak density. Fitted points
/// thus get 1 - glosh for their own cluster. When raw values sum above one,
/// mass is handed out from the strongest clusters down, equal raw values
/// sharing proportionally.
MembershipVector soft_membership(const ClusterModel& model, std::span<const float> query);

/// soft_membership for many queries, in parallel.
std::vector<MembershipVector> soft_membership_batch(const ClusterModel& model, const kernels::PointSet& queries);

/// {clusters: [{id, size, lambda_max, exemplar_ids}], noise_count}. Exemplars
/// are members with GLOSH 0. `row_ids` names the fitted points.
nlohmann::json cluster_report(const ClusterModel& model, const std::vector<std::string>& row_ids);

}  // namespace avp
