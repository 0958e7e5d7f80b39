#include "avp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

namespace avp::kernels {

void PointSet::push_back(std::span<const float> point) {
  if (dim == 0) dim = point.size();
  values.insert(values.end(), point.begin(), point.end());
}

double euclidean(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

namespace {

double kth_smallest(std::span<const double> row, std::size_t k, std::vector<double>& scratch) {
  scratch.assign(row.begin(), row.end());
  const std::size_t idx = std::min(k, scratch.size()) - 1;
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(idx), scratch.end());
  return scratch[idx];
}

inline double mutual_reachability(const DistanceMatrix& dist, std::span<const double> core, std::size_t a,
                                  std::size_t b) {
  return std::max({core[a], core[b], dist(a, b)});
}

// Candidate for the next Prim vertex: smaller weight first, then lower index.
struct Candidate {
  double weight = std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();

  bool better_than(const Candidate& other) const {
    return weight < other.weight || (weight == other.weight && index < other.index);
  }
};

}  // namespace

DistanceMatrix pairwise_distances(const PointSet& points) {
  const std::size_t n = points.size();
  DistanceMatrix out{n, std::vector<double>(n * n, 0.0)};
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t j = ui + 1; j < n; ++j) {
      const double d = euclidean(points.row(ui), points.row(j));
      out.values[ui * n + j] = d;
      out.values[j * n + ui] = d;
    }
  }
  return out;
}

std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.n;
  std::vector<double> core(n, 0.0);
  if (n == 0 || k == 0) return core;
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      core[ui] = kth_smallest({dist.values.data() + ui * n, n}, k, scratch);
    }
  }
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const DistanceMatrix& dist, std::span<const double> core) {
  const std::size_t n = dist.n;
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);

  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  std::vector<char> in_tree(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  const auto sn = static_cast<std::ptrdiff_t>(n);

  for (std::size_t step = 1; step < n; ++step) {
    Candidate global;
#pragma omp parallel
    {
      Candidate local;
#pragma omp for schedule(static) nowait
      for (std::ptrdiff_t s = 0; s < sn; ++s) {
        const auto u = static_cast<std::size_t>(s);
        if (in_tree[u]) continue;
        const double w = mutual_reachability(dist, core, current, u);
        if (w < best[u] || (w == best[u] && current < parent[u])) {
          best[u] = w;
          parent[u] = current;
        }
        const Candidate c{best[u], u};
        if (c.better_than(local)) local = c;
      }
#pragma omp critical(avp_prim_argmin)
      {
        if (local.better_than(global)) global = local;
      }
    }
    in_tree[global.index] = 1;
    edges.push_back({parent[global.index], global.index, global.weight});
    current = global.index;
  }
  return edges;
}

std::vector<double> cross_distances(const PointSet& queries, const PointSet& points) {
  const std::size_t q = queries.size();
  const std::size_t n = points.size();
  std::vector<double> out(q * n, 0.0);
  const auto sq = static_cast<std::ptrdiff_t>(q);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sq; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < n; ++j) out[ui * n + j] = euclidean(queries.row(ui), points.row(j));
  }
  return out;
}

namespace serial {

DistanceMatrix pairwise_distances(const PointSet& points) {
  const std::size_t n = points.size();
  DistanceMatrix out{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean(points.row(i), points.row(j));
      out.values[i * n + j] = d;
      out.values[j * n + i] = d;
    }
  }
  return out;
}

std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.n;
  std::vector<double> core(n, 0.0);
  if (n == 0 || k == 0) return core;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) core[i] = kth_smallest({dist.values.data() + i * n, n}, k, scratch);
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const DistanceMatrix& dist, std::span<const double> core) {
  const std::size_t n = dist.n;
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);

  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  std::vector<char> in_tree(n, 0);
  std::size_t current = 0;
  in_tree[0] = 1;

  for (std::size_t step = 1; step < n; ++step) {
    Candidate next;
    for (std::size_t u = 0; u < n; ++u) {
      if (in_tree[u]) continue;
      const double w = mutual_reachability(dist, core, current, u);
      if (w < best[u] || (w == best[u] && current < parent[u])) {
        best[u] = w;
        parent[u] = current;
      }
      const Candidate c{best[u], u};
      if (c.better_than(next)) next = c;
    }
    in_tree[next.index] = 1;
    edges.push_back({parent[next.index], next.index, next.weight});
    current = next.index;
  }
  return edges;
}

std::vector<double> cross_distances(const PointSet& queries, const PointSet& points) {
  const std::size_t q = queries.size();
  const std::size_t n = points.size();
  std::vector<double> out(q * n, 0.0);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = euclidean(queries.row(i), points.row(j));
  return out;
}

}  // namespace serial

}  // namespace avp::kernels
