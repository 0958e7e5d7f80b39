#include "avp/density_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avp/error.hpp"

namespace avp {

namespace {

// Single-linkage merge tree. Leaves are points 0..n-1; merge k is node n+k.
struct LinkageTree {
  std::size_t n = 0;
  std::vector<std::size_t> left, right, size;
  std::vector<double> level;

  std::size_t root() const { return 2 * n - 2; }
  std::size_t size_of(std::size_t node) const { return node < n ? 1 : size[node - n]; }
};

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

LinkageTree single_linkage(std::size_t n, std::vector<kernels::MstEdge> edges) {
  std::stable_sort(edges.begin(), edges.end(),
                   [](const kernels::MstEdge& a, const kernels::MstEdge& b) { return a.weight < b.weight; });
  LinkageTree tree;
  tree.n = n;
  DisjointSet sets(n);
  std::vector<std::size_t> node_of(n);
  std::iota(node_of.begin(), node_of.end(), 0);
  for (const auto& e : edges) {
    const std::size_t ra = sets.find(e.a);
    const std::size_t rb = sets.find(e.b);
    const std::size_t id = n + tree.left.size();
    tree.left.push_back(node_of[ra]);
    tree.right.push_back(node_of[rb]);
    tree.level.push_back(e.weight);
    tree.size.push_back(tree.size_of(node_of[ra]) + tree.size_of(node_of[rb]));
    sets.parent[rb] = ra;
    node_of[ra] = id;
  }
  return tree;
}

void collect_leaves(const LinkageTree& tree, std::size_t node, std::vector<std::size_t>& out) {
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t s = stack.back();
    stack.pop_back();
    if (s < tree.n) {
      out.push_back(s);
    } else {
      stack.push_back(tree.right[s - tree.n]);
      stack.push_back(tree.left[s - tree.n]);
    }
  }
}

void condense(const LinkageTree& tree, std::size_t min_cluster_size, ClusterModel& model) {
  model.nodes.assign(1, CondensedNode{});
  model.nodes[0].size = tree.n;

  std::vector<std::pair<std::size_t, std::size_t>> stack{{tree.root(), 0}};
  std::vector<std::size_t> leaves;
  while (!stack.empty()) {
    const auto [sl, c] = stack.back();
    stack.pop_back();
    const std::size_t i = sl - tree.n;
    const double level = tree.level[i];
    const std::size_t children[2] = {tree.left[i], tree.right[i]};
    const bool big[2] = {tree.size_of(children[0]) >= min_cluster_size,
                         tree.size_of(children[1]) >= min_cluster_size};

    if (big[0] && big[1]) {
      std::size_t ids[2];
      for (int k = 0; k < 2; ++k) {
        ids[k] = model.nodes.size();
        CondensedNode node;
        node.parent = static_cast<int>(c);
        node.birth_lambda = lambda_of(level);
        node.size = tree.size_of(children[k]);
        model.nodes.push_back(node);
        model.nodes[c].children.push_back(ids[k]);
      }
      stack.emplace_back(children[1], ids[1]);
      stack.emplace_back(children[0], ids[0]);
      continue;
    }
    for (int k = 1; k >= 0; --k) {
      if (big[k]) {
        stack.emplace_back(children[k], c);
        continue;
      }
      leaves.clear();
      collect_leaves(tree, children[k], leaves);
      for (std::size_t p : leaves) {
        model.departure_level[p] = level;
        model.departure_node[p] = c;
      }
    }
  }
}

void compute_stability(ClusterModel& model) {
  auto& nodes = model.nodes;
  for (std::size_t p = 0; p < model.size(); ++p) {
    auto& node = nodes[model.departure_node[p]];
    const double lambda = model.departure_lambda(p);
    node.stability += lambda - node.birth_lambda;
    node.lambda_max = std::max(node.lambda_max, lambda);
  }
  for (std::size_t c = nodes.size(); c-- > 1;) {
    auto& parent = nodes[static_cast<std::size_t>(nodes[c].parent)];
    parent.stability += static_cast<double>(nodes[c].size) * (nodes[c].birth_lambda - parent.birth_lambda);
    parent.lambda_max = std::max(parent.lambda_max, nodes[c].lambda_max);
  }
}

// Excess-of-mass selection over non-root nodes.
std::vector<std::size_t> select_clusters(const ClusterModel& model) {
  const auto& nodes = model.nodes;
  std::vector<double> best(nodes.size(), 0.0);
  std::vector<char> selected(nodes.size(), 0);
  for (std::size_t c = nodes.size(); c-- > 1;) {
    const auto& node = nodes[c];
    if (node.children.empty()) {
      best[c] = node.stability;
      selected[c] = 1;
      continue;
    }
    double subtree = 0.0;
    for (std::size_t child : node.children) subtree += best[child];
    if (subtree > node.stability) {
      best[c] = subtree;
    } else {
      best[c] = node.stability;
      selected[c] = 1;
    }
  }

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> stack(nodes[0].children.rbegin(), nodes[0].children.rend());
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (selected[c]) {
      chosen.push_back(c);
    } else {
      stack.insert(stack.end(), nodes[c].children.rbegin(), nodes[c].children.rend());
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void assign_labels(ClusterModel& model, const std::vector<std::size_t>& chosen) {
  const std::size_t n = model.size();
  std::vector<int> node_label(model.nodes.size(), kNoise);
  for (std::size_t k = 0; k < chosen.size(); ++k) node_label[chosen[k]] = static_cast<int>(k);
  for (std::size_t c = 1; c < model.nodes.size(); ++c) {
    const int parent_label = node_label[static_cast<std::size_t>(model.nodes[c].parent)];
    if (node_label[c] == kNoise && parent_label != kNoise) node_label[c] = parent_label;
  }

  // A lone root cluster has no birth level to separate members from
  // stragglers, so points leaving far above the bulk (upper Tukey fence,
  // 3 IQR) are treated as noise.
  double fence = std::numeric_limits<double>::infinity();
  if (model.single_cluster_fallback) {
    std::vector<double> levels(model.departure_level);
    std::sort(levels.begin(), levels.end());
    const double q1 = quantile_sorted(levels, 0.25);
    const double q3 = quantile_sorted(levels, 0.75);
    fence = q3 + 3.0 * (q3 - q1);
  }

  model.clusters.resize(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    model.clusters[k].node = chosen[k];
    model.clusters[k].lambda_max = model.nodes[chosen[k]].lambda_max;
  }
  for (std::size_t p = 0; p < n; ++p) {
    int label = node_label[model.departure_node[p]];
    if (model.single_cluster_fallback && model.departure_level[p] > fence) label = kNoise;
    model.labels[p] = label;
    if (label != kNoise) model.clusters[static_cast<std::size_t>(label)].members.push_back(p);
  }
}

void compute_glosh(ClusterModel& model) {
  for (std::size_t p = 0; p < model.size(); ++p) {
    const int label = model.labels[p];
    const double lambda_max = label != kNoise ? model.clusters[static_cast<std::size_t>(label)].lambda_max
                                              : model.nodes[model.departure_node[p]].lambda_max;
    const double lambda = model.departure_lambda(p);
    double score = lambda >= lambda_max ? 0.0 : 1.0 - lambda / lambda_max;
    model.glosh[p] = std::clamp(score, 0.0, 1.0);
  }
}

std::size_t neighbor_rank(const ClusterModel& model) {
  return std::min(model.params.effective_min_samples(), model.size());
}

}  // namespace

ClusterModel fit(const kernels::PointSet& points, const ClusterParams& params) {
  if (params.min_cluster_size < 2) throw Error("min_cluster_size must be at least 2");
  ClusterModel model;
  model.params = params;
  model.points = points;
  const std::size_t n = points.size();
  model.labels.assign(n, kNoise);
  model.glosh.assign(n, 1.0);
  model.departure_level.assign(n, 0.0);
  model.departure_node.assign(n, 0);
  model.nodes.assign(1, CondensedNode{});
  model.nodes[0].size = n;
  if (n < 2) return model;

  const auto dist = kernels::pairwise_distances(points);
  model.core = kernels::core_distances(dist, std::min(params.effective_min_samples(), n));
  model.mst = kernels::mutual_reachability_mst(dist, model.core);

  const LinkageTree tree = single_linkage(n, model.mst);
  condense(tree, params.min_cluster_size, model);
  compute_stability(model);

  std::vector<std::size_t> chosen = select_clusters(model);
  if (chosen.empty() && model.nodes[0].children.empty() && n >= params.min_cluster_size) {
    model.single_cluster_fallback = true;
    chosen.push_back(0);
  }
  assign_labels(model, chosen);
  compute_glosh(model);
  return model;
}

const std::vector<double>& glosh_scores(const ClusterModel& model) { return model.glosh; }

MembershipVector soft_membership(const ClusterModel& model, std::span<const float> query) {
  const std::size_t n = model.size();
  MembershipVector out(model.cluster_count(), 0.0);
  if (out.empty()) return out;
  if (query.size() != model.points.dim) throw Error("query dimension does not match the fitted points");

  std::vector<double> dist(n);
  for (std::size_t j = 0; j < n; ++j) dist[j] = kernels::euclidean(query, model.points.row(j));
  std::vector<double> sorted(dist);
  const std::size_t k = neighbor_rank(model);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  const double core = sorted[k - 1];

  std::vector<double> raw(out.size(), 0.0);
  for (std::size_t l = 0; l < out.size(); ++l) {
    const auto& cluster = model.clusters[l];
    double attach = std::numeric_limits<double>::infinity();
    for (std::size_t p : cluster.members) attach = std::min(attach, std::max({core, dist[p], model.departure_level[p]}));
    const double lambda = lambda_of(attach);
    raw[l] = lambda >= cluster.lambda_max ? 1.0 : std::clamp(lambda / cluster.lambda_max, 0.0, 1.0);
  }

  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (total <= 1.0) return raw;

  // Hand out unit mass tier by tier, strongest first.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });
  double remaining = 1.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double tier_sum = 0.0;
    while (j < order.size() && std::abs(raw[order[j]] - raw[order[i]]) <= 1e-12) tier_sum += raw[order[j++]];
    const double scale = tier_sum <= remaining ? 1.0 : (tier_sum > 0.0 ? remaining / tier_sum : 0.0);
    for (std::size_t t = i; t < j; ++t) out[order[t]] = raw[order[t]] * scale;
    remaining = std::max(0.0, remaining - tier_sum * scale);
    i = j;
  }
  return out;
}

std::vector<MembershipVector> soft_membership_batch(const ClusterModel& model, const kernels::PointSet& queries) {
  const std::size_t q = queries.size();
  std::vector<MembershipVector> out(q);
  const auto sq = static_cast<std::ptrdiff_t>(q);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < sq; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out[ui] = soft_membership(model, queries.row(ui));
  }
  return out;
}

nlohmann::json cluster_report(const ClusterModel& model, const std::vector<std::string>& row_ids) {
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t l = 0; l < model.cluster_count(); ++l) {
    const auto& cluster = model.clusters[l];
    nlohmann::json exemplars = nlohmann::json::array();
    for (std::size_t p : cluster.members) {
      if (model.glosh[p] == 0.0) exemplars.push_back(p < row_ids.size() ? row_ids[p] : std::to_string(p));
    }
    clusters.push_back({{"id", l},
                        {"size", cluster.members.size()},
                        {"lambda_max", cluster.lambda_max},
                        {"exemplar_ids", exemplars}});
  }
  const auto noise = static_cast<std::size_t>(std::count(model.labels.begin(), model.labels.end(), kNoise));
  return {{"clusters", clusters}, {"noise_count", noise}};
}

}  // namespace avp
