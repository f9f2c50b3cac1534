#include "cloudsample/samplers.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cloudsample/nnsearch.hpp"

namespace cloudsample::sampling {

namespace {

void check_m(std::size_t m, std::size_t n) {
  if (m < 1 || m > n)
    throw Error(Errc::MTooLarge,
                "m=" + std::to_string(m) + " with " + std::to_string(n) + " points");
}

// Writes `m` FPS picks over rows [begin, end) into `out`, starting at `start`.
void fps_range(const float* p, std::size_t begin, std::size_t end, std::size_t m,
               std::size_t start, std::vector<float>& min_dist,
               std::vector<std::size_t>& out) {
  const std::size_t n = end - begin;
  min_dist.assign(n, std::numeric_limits<float>::infinity());
  std::size_t last = start;
  out.push_back(begin + last);
  min_dist[last] = -1.0f;  // selected
  for (std::size_t step = 1; step < m; ++step) {
    const float* q = p + 3 * (begin + last);
    // Selected points hold -1, which min() preserves.
    for (std::size_t i = 0; i < n; ++i)
      min_dist[i] = std::min(min_dist[i], nn::squared_distance(p + 3 * (begin + i), q));
    std::size_t best = 0;
    float best_d = min_dist[0];
    for (std::size_t i = 1; i < n; ++i)
      if (min_dist[i] > best_d) {
        best_d = min_dist[i];
        best = i;
      }
    last = best;
    min_dist[last] = -1.0f;
    out.push_back(begin + last);
  }
}

}  // namespace

SampleResult random_sample(const PointCloud& cloud, std::size_t m, std::uint64_t seed) {
  const std::size_t n = cloud.size();
  check_m(m, n);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t j = 0; j < m; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  pool.resize(m);
  PointCloud out = cloud.gather(pool);
  return {std::move(pool), std::move(out)};
}

SampleResult fps(const PointCloud& cloud, std::size_t m, std::size_t start) {
  const std::size_t n = cloud.size();
  check_m(m, n);
  if (start >= n)
    throw Error(Errc::BadStart,
                "start " + std::to_string(start) + " >= " + std::to_string(n));
  std::vector<std::size_t> indices;
  indices.reserve(m);
  std::vector<float> min_dist;
  fps_range(cloud.points().data(), 0, n, m, start, min_dist, indices);
  PointCloud out = cloud.gather(indices);
  return {std::move(indices), std::move(out)};
}

SampleResult fps_chunked(const PointCloud& cloud, std::size_t m, std::size_t chunks) {
  const std::size_t n = cloud.size();
  check_m(m, n);
  if (chunks < 1 || chunks > n)
    throw Error(Errc::BadChunkCount,
                std::to_string(chunks) + " chunks for " + std::to_string(n) + " points");
  std::vector<std::size_t> indices;
  indices.reserve(m);
  std::vector<float> min_dist;
  std::size_t begin = 0;
  for (std::size_t j = 0; j < chunks; ++j) {
    const std::size_t size = n / chunks + (j < n % chunks ? 1 : 0);
    const std::size_t picks = m / chunks + (j < m % chunks ? 1 : 0);
    if (picks > 0)
      fps_range(cloud.points().data(), begin, begin + size, picks, 0, min_dist, indices);
    begin += size;
  }
  PointCloud out = cloud.gather(indices);
  return {std::move(indices), std::move(out)};
}

PointCloud crop_max_points(const PointCloud& cloud, std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw Error(Errc::MTooLarge, "crop cap must be >= 1");
  if (cloud.size() <= cap) return cloud;
  return random_sample(cloud, cap, seed).cloud;
}

}  // namespace cloudsample::sampling
