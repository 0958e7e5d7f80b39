#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "avp/kernels.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = fs::temp_directory_path() / ("avp_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<float> unit(std::vector<float> v) {
  double n = 0;
  for (float x : v) n += double{x} * x;
  n = std::sqrt(n);
  for (float& x : v) x = static_cast<float>(x / n);
  return v;
}

inline std::vector<float> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (float& x : v) x = g(rng);
  return unit(v);
}

// Gaussian blob around `center`, points left unnormalized.
inline void add_blob(avp::kernels::PointSet& set, const std::vector<float>& center, double sigma, std::size_t n,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, sigma);
  set.dim = center.size();
  std::vector<float> p(center.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < p.size(); ++d) p[d] = static_cast<float>(center[d] + g(rng));
    set.push_back(p);
  }
}

}  // namespace testing
