#include <omp.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "avp/density_cluster.hpp"
#include "avp/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace avp;
using kernels::PointSet;

namespace {

std::vector<float> axis(std::size_t dim, std::size_t k, float scale) {
  std::vector<float> v(dim, 0.0f);
  v[k] = scale;
  return v;
}

// Fraction of points whose cluster holds a single generating label.
double purity(const std::vector<int>& labels, const std::vector<int>& truth) {
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kNoise) ++counts[labels[i]][truth[i]];
  std::size_t majority = 0, total = 0;
  for (const auto& [c, by_truth] : counts) {
    std::size_t best = 0;
    for (const auto& [t, n] : by_truth) {
      best = std::max(best, n);
      total += n;
    }
    majority += best;
  }
  return total == 0 ? 0.0 : static_cast<double>(majority) / static_cast<double>(total);
}

double sum(const MembershipVector& m) { return std::accumulate(m.begin(), m.end(), 0.0); }

}  // namespace

TEST_CASE("two blobs ten sigma apart") {
  std::mt19937_64 rng(1);
  const double sigma = 0.02;
  PointSet p;
  testing::add_blob(p, axis(3, 0, 0.0f), sigma, 30, rng);
  testing::add_blob(p, axis(3, 0, static_cast<float>(10 * sigma)), sigma, 30, rng);
  std::vector<int> truth(60, 0);
  std::fill(truth.begin() + 30, truth.end(), 1);
  const auto m = fit(p, {5, 0});
  CHECK(m.cluster_count() == 2);
  CHECK(purity(m.labels, truth) == 1.0);
}

TEST_CASE("identical points form one cluster with zero outlier scores") {
  PointSet p;
  p.dim = 4;
  for (int i = 0; i < 30; ++i) p.push_back(testing::unit({1, 2, 3, 4}));
  const auto m = fit(p, {5, 0});
  REQUIRE(m.cluster_count() == 1);
  CHECK(std::all_of(m.labels.begin(), m.labels.end(), [](int l) { return l == 0; }));
  CHECK(std::all_of(m.glosh.begin(), m.glosh.end(), [](double g) { return g == 0.0; }));
}

TEST_CASE("far point is noise") {
  std::mt19937_64 rng(2);
  const double sigma = 0.02;
  PointSet p;
  testing::add_blob(p, axis(3, 1, 0.0f), sigma, 30, rng);
  p.push_back(axis(3, 0, static_cast<float>(50 * sigma)));
  const auto m = fit(p, {5, 0});
  CHECK(m.labels.back() == kNoise);
  CHECK(m.cluster_count() >= 1);
}

TEST_CASE("chain with a straggler") {
  // min_samples 2 makes each core distance the gap to the nearest neighbor,
  // so the mutual-reachability chain edges are 0.1, 0.11, ..., 0.15 and the
  // straggler hangs on an edge of 2.25. No split ever leaves two sides of
  // three or more points: the root is the only cluster, points 0-2 leave
  // last at 1/0.11 and the straggler first at 1/2.25.
  PointSet p;
  p.dim = 1;
  for (double x : {0.0, 0.1, 0.21, 0.33, 0.46, 0.60, 0.75, 3.0}) p.push_back(std::vector<float>{static_cast<float>(x)});
  const auto m = fit(p, {3, 2});
  const auto& g = glosh_scores(m);
  CHECK(m.cluster_count() == 1);
  const double straggler = g.back();
  CHECK(straggler == *std::max_element(g.begin(), g.end()));
  CHECK(straggler == doctest::Approx(1.0 - 0.11 / 2.25).epsilon(1e-6));
  CHECK(g[0] == 0.0);
  CHECK(g[6] == doctest::Approx(1.0 - 0.11 / 0.15).epsilon(1e-6));
}

TEST_CASE("glosh bounds and per-cluster minimum") {
  std::mt19937_64 rng(4);
  PointSet p;
  for (std::size_t c = 0; c < 4; ++c) testing::add_blob(p, axis(6, c, 1.0f), 0.05, 25, rng);
  for (int i = 0; i < 10; ++i) p.push_back(testing::random_unit(6, rng));
  const auto m = fit(p, {5, 0});
  REQUIRE(m.cluster_count() >= 1);
  for (double g : m.glosh) {
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
  for (const auto& c : m.clusters) {
    double lo = 1.0;
    for (std::size_t i : c.members) lo = std::min(lo, m.glosh[i]);
    CHECK(lo == 0.0);
  }
  std::size_t labelled = 0;
  for (std::size_t c = 0; c < m.cluster_count(); ++c) {
    for (std::size_t i : m.clusters[c].members) CHECK(m.labels[i] == static_cast<int>(c));
    labelled += m.clusters[c].members.size();
  }
  CHECK(labelled == static_cast<std::size_t>(std::count_if(m.labels.begin(), m.labels.end(),
                                                           [](int l) { return l != kNoise; })));
}

TEST_CASE("fit edge cases") {
  PointSet p;
  p.dim = 2;
  CHECK_THROWS_AS(fit(p, {1, 0}), Error);
  CHECK(fit(p, {5, 0}).cluster_count() == 0);
  p.push_back(std::vector<float>{1, 0});
  p.push_back(std::vector<float>{0, 1});
  const auto m = fit(p, {5, 0});
  CHECK(m.cluster_count() == 0);
  CHECK(std::all_of(m.labels.begin(), m.labels.end(), [](int l) { return l == kNoise; }));
}

TEST_CASE("fit is deterministic and thread-count independent") {
  std::mt19937_64 rng(8);
  PointSet p;
  for (std::size_t c = 0; c < 3; ++c) testing::add_blob(p, axis(5, c, 1.0f), 0.08, 40, rng);
  const auto a = fit(p, {5, 3});
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto b = fit(p, {5, 3});
  omp_set_num_threads(saved);
  CHECK(a.labels == b.labels);
  CHECK(a.glosh == b.glosh);
}

TEST_CASE("soft membership of fitted points reproduces the outlier score") {
  std::mt19937_64 rng(9);
  PointSet p;
  for (std::size_t c = 0; c < 3; ++c) testing::add_blob(p, axis(8, c, 1.0f), 0.05, 30, rng);
  const auto m = fit(p, {5, 0});
  REQUIRE(m.cluster_count() == 3);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto mv = soft_membership(m, p.row(i));
    CHECK(sum(mv) <= 1.0 + 1e-12);
    if (m.labels[i] == kNoise) continue;
    CHECK(mv[static_cast<std::size_t>(m.labels[i])] == doctest::Approx(1.0 - m.glosh[i]).epsilon(1e-6));
  }
}

TEST_CASE("soft membership examples") {
  std::mt19937_64 rng(10);
  const double sigma = 0.03;
  PointSet p;
  testing::add_blob(p, axis(4, 0, 1.0f), sigma, 30, rng);
  // Second blob mirrors the first through the plane x0 = x1.
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto r = std::vector<float>(p.row(i).begin(), p.row(i).end());
    std::swap(r[0], r[1]);
    p.push_back(r);
  }
  const auto m = fit(p, {5, 0});
  REQUIRE(m.cluster_count() == 2);

  SUBCASE("densest point") {
    const auto& c = m.clusters[0];
    const auto densest = *std::min_element(c.members.begin(), c.members.end(),
                                           [&](std::size_t a, std::size_t b) { return m.glosh[a] < m.glosh[b]; });
    const auto mv = soft_membership(m, p.row(densest));
    CHECK(mv[0] == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("far query") {
    std::vector<float> q(4, 0.0f);
    q[3] = static_cast<float>(1.0 + 10 * 10 * sigma);
    for (double v : soft_membership(m, q)) CHECK(v < 0.1);
  }
  SUBCASE("equidistant query") {
    const std::vector<float> q = {0.5f, 0.5f, 0.0f, 0.0f};
    const auto mv = soft_membership(m, q);
    CHECK(mv[0] == doctest::Approx(mv[1]).epsilon(1e-6));
    CHECK(sum(mv) <= 1.0 + 1e-12);
  }
}

TEST_CASE("soft membership invariants on random queries") {
  std::mt19937_64 rng(12);
  PointSet p;
  for (std::size_t c = 0; c < 4; ++c) testing::add_blob(p, axis(6, c, 0.4f), 0.1, 20, rng);
  const auto m = fit(p, {4, 0});
  PointSet q;
  q.dim = 6;
  for (int i = 0; i < 200; ++i) q.push_back(testing::random_unit(6, rng));
  for (std::size_t i = 0; i < p.size(); ++i) q.push_back(p.row(i));
  const auto batch = soft_membership_batch(m, q);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto& mv = batch[i];
    CHECK(mv.size() == m.cluster_count());
    for (double v : mv) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(sum(mv) <= 1.0 + 1e-12);
    CHECK(mv == soft_membership(m, q.row(i)));
  }
}

TEST_CASE("cluster report") {
  PointSet p;
  p.dim = 2;
  for (int i = 0; i < 6; ++i) p.push_back(std::vector<float>{1, 0});
  const auto m = fit(p, {3, 0});
  const auto doc = cluster_report(m, {"a", "b", "c", "d", "e", "f"});
  REQUIRE(doc["clusters"].size() == 1);
  CHECK(doc["clusters"][0]["size"] == 6);
  CHECK(doc["clusters"][0]["exemplar_ids"].size() == 6);
  CHECK(doc["noise_count"] == 0);
}
