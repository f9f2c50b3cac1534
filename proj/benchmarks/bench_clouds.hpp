#pragma once

#include <cstdint>
#include <random>

#include "cloudsample/types.hpp"

namespace cloudsample::bench {

/// Uniform points in [-half, half]^3.
inline PointCloud uniform_cloud(std::size_t n, std::uint64_t seed, float half = 40.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-half, half);
  PointMatrix p(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = dist(rng);
  return PointCloud(std::move(p));
}

}  // namespace cloudsample::bench
