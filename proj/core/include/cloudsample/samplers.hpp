#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cloudsample/types.hpp"

namespace cloudsample::sampling {

struct SampleResult {
  std::vector<std::size_t> indices;
  PointCloud cloud;
};

/// m distinct indices, uniform without replacement. Same seed, same output.
SampleResult random_sample(const PointCloud& cloud, std::size_t m, std::uint64_t seed);

/// Farthest point sampling from `start`; O(n m). Ties go to the lower index.
SampleResult fps(const PointCloud& cloud, std::size_t m, std::size_t start = 0);

/// FPS run independently over `chunks` contiguous index ranges, each started
/// at its first index. Chunk j gets floor(m/M) picks, plus one for the first
/// m mod M chunks (points are split the same way).
SampleResult fps_chunked(const PointCloud& cloud, std::size_t m, std::size_t chunks);

/// Identity when n <= cap, otherwise a seeded random subset of `cap` points.
PointCloud crop_max_points(const PointCloud& cloud, std::size_t cap, std::uint64_t seed);

}  // namespace cloudsample::sampling
