#pragma once

// Data-parallel inner loops of the density clustering. Every kernel has an
// OpenMP version (used by the library) and a serial reference in
// avp::kernels::serial kept for tests and benchmarks. Both produce
// bit-identical results: each output element is written by exactly one
// iteration and no floating-point reduction is reassociated.

#include <cstddef>
#include <span>
#include <vector>

namespace avp::kernels {

/// Contiguous row-major point cloud.
struct PointSet {
  std::size_t dim = 0;
  std::vector<float> values;

  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  void push_back(std::span<const float> point);
};

double euclidean(std::span<const float> a, std::span<const float> b);

/// Dense symmetric n x n distance matrix, row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

struct MstEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

DistanceMatrix pairwise_distances(const PointSet& points);

/// Distance to the k-th nearest point, the point itself counted as the
/// first neighbor (k = 1 gives 0). k is clamped to n.
std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k);

/// Prim's algorithm on the complete mutual-reachability graph
/// max(core[a], core[b], d(a,b)). Ties go to the lower vertex index.
/// Edges are returned in insertion order.
std::vector<MstEdge> mutual_reachability_mst(const DistanceMatrix& dist, std::span<const double> core);

/// Distances from each query to every point: queries.size() x points.size().
std::vector<double> cross_distances(const PointSet& queries, const PointSet& points);

namespace serial {

DistanceMatrix pairwise_distances(const PointSet& points);
std::vector<double> core_distances(const DistanceMatrix& dist, std::size_t k);
std::vector<MstEdge> mutual_reachability_mst(const DistanceMatrix& dist, std::span<const double> core);
std::vector<double> cross_distances(const PointSet& queries, const PointSet& points);

}  // namespace serial

}  // namespace avp::kernels
