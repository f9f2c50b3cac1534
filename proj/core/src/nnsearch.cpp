#include "cloudsample/nnsearch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>
#include <numeric>
#include <string>
#include <utility>

namespace cloudsample::nn {

namespace {

void check_k(std::size_t k, std::size_t n) {
  if (k < 1 || k > n)
    throw Error(Errc::KTooLarge,
                "k=" + std::to_string(k) + " with " + std::to_string(n) + " points");
}

using Candidate = std::pair<float, NeighborTable::Index>;

}  // namespace

NeighborTable knn_bruteforce(const PointCloud& cloud, std::size_t k) {
  const std::size_t n = cloud.size();
  check_k(k, n);
  NeighborTable table(n, k);
  const float* p = cloud.points().data();
  std::vector<Candidate> candidates(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      candidates[j] = {squared_distance(p + 3 * i, p + 3 * j),
                       static_cast<NeighborTable::Index>(j)};
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end());
    auto row = table.row(i);
    for (std::size_t j = 0; j < k; ++j) row[j] = candidates[j].second;
  }
  return table;
}

namespace {

// Uniform grid with cells at least as wide as the radius, so every point
// within the radius of a query lies in the 27 cells around it.
class RadiusGrid {
 public:
  RadiusGrid(const PointMatrix& points, double radius) {
    const Eigen::RowVector3d lo = points.colwise().minCoeff().cast<double>();
    const Eigen::RowVector3d hi = points.colwise().maxCoeff().cast<double>();
    const double extent = (hi - lo).maxCoeff();
    // Slack absorbs rounding in the float distance test and cell arithmetic.
    cell_ = std::max(radius * (1.0 + 1e-4) + 1e-30, extent / kMaxCellsPerAxis);
    origin_ = lo;
    for (int a = 0; a < 3; ++a)
      dims_[a] = static_cast<std::int64_t>(std::floor((hi(a) - lo(a)) / cell_)) + 1;

    const auto n = static_cast<std::size_t>(points.rows());
    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
    for (std::size_t i = 0; i < n; ++i)
      keyed[i] = {key(cell_of(points.row(static_cast<Eigen::Index>(i)))),
                  static_cast<std::uint32_t>(i)};
    std::sort(keyed.begin(), keyed.end());
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      order_[i] = keyed[i].second;
      if (i == 0 || keyed[i].first != keyed[i - 1].first)
        cells_.emplace(keyed[i].first, std::pair<std::size_t, std::size_t>{i, i});
      cells_[keyed[i].first].second = i + 1;
    }
  }

  template <typename Visit>
  void for_each_candidate(const Eigen::RowVector3f& query, Visit&& visit) const {
    const auto center = cell_of(query);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const std::array<std::int64_t, 3> c{center[0] + dx, center[1] + dy, center[2] + dz};
          if (c[0] < 0 || c[1] < 0 || c[2] < 0 || c[0] >= dims_[0] || c[1] >= dims_[1] ||
              c[2] >= dims_[2])
            continue;
          const auto it = cells_.find(key(c));
          if (it == cells_.end()) continue;
          for (std::size_t s = it->second.first; s < it->second.second; ++s) visit(order_[s]);
        }
  }

 private:
  static constexpr double kMaxCellsPerAxis = 512;

  template <typename Row>
  std::array<std::int64_t, 3> cell_of(const Row& p) const {
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a)
      c[static_cast<std::size_t>(a)] = std::clamp<std::int64_t>(
          static_cast<std::int64_t>(std::floor((static_cast<double>(p(a)) - origin_(a)) / cell_)),
          0, dims_[a] - 1);
    return c;
  }

  std::uint64_t key(const std::array<std::int64_t, 3>& c) const {
    return static_cast<std::uint64_t>((c[0] * dims_[1] + c[1]) * dims_[2] + c[2]);
  }

  double cell_ = 1;
  Eigen::RowVector3d origin_;
  std::array<std::int64_t, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> order_;
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> cells_;
};

}  // namespace

NeighborTable ball_query(const PointCloud& cloud, double radius, std::size_t k) {
  const std::size_t n = cloud.size();
  check_k(k, n);
  if (!(radius > 0)) throw Error(Errc::InvalidConfig, "radius must be > 0");
  const float r2 = static_cast<float>(radius * radius);
  NeighborTable table(n, k);
  const float* p = cloud.points().data();
  const RadiusGrid grid(cloud.points(), radius);
  std::vector<Candidate> inside;
  inside.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    inside.clear();
    grid.for_each_candidate(cloud.point(i), [&](std::uint32_t j) {
      const float d = squared_distance(p + 3 * i, p + 3 * j);
      if (d <= r2) inside.emplace_back(d, static_cast<NeighborTable::Index>(j));
    });
    const std::size_t take = std::min(k, inside.size());
    std::partial_sort(inside.begin(), inside.begin() + static_cast<std::ptrdiff_t>(take),
                      inside.end());
    auto row = table.row(i);
    for (std::size_t j = 0; j < take; ++j) row[j] = inside[j].second;
  }
  return table;
}

NeighborTable find_neighbors(const PointCloud& cloud, SearchBackend backend,
                             std::size_t k, double radius) {
  switch (backend) {
    case SearchBackend::BallQuery: return ball_query(cloud, radius, k);
    case SearchBackend::KnnBruteforce: return knn_bruteforce(cloud, k);
    case SearchBackend::KdTree: {
      check_k(k, cloud.size());
      return KdTree(cloud).knn(cloud, k);
    }
  }
  throw Error(Errc::InvalidConfig, "unknown backend");
}

}  // namespace cloudsample::nn
