#pragma once

#include <cstddef>
#include <vector>

#include "cloudsample/config.hpp"
#include "cloudsample/types.hpp"

namespace cloudsample::nn {

/// Squared Euclidean distance. Every backend goes through this so that
/// distances round identically and results can be compared exactly.
inline float squared_distance(const float* a, const float* b) {
  const float dx = a[0] - b[0];
  const float dy = a[1] - b[1];
  const float dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Row i holds the k nearest points to point i (itself included), nearest
/// first, equal distances ordered by index. Throws KTooLarge if k > n.
NeighborTable knn_bruteforce(const PointCloud& cloud, std::size_t k);

/// Nearest-first up to k points within `radius` of each point, padded with
/// the sentinel.
NeighborTable ball_query(const PointCloud& cloud, double radius, std::size_t k);

/// Balanced kd-tree with axis cycling x, y, z by depth and bucketed leaves.
class KdTree {
 public:
  struct Node {
    // Leaf when left < 0; then [begin, end) indexes order().
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
    float split = 0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    bool is_leaf() const { return left < 0; }
  };

  static constexpr std::size_t kDefaultBucket = 16;

  /// Throws EmptyCloud. The tree keeps no reference to `cloud`.
  explicit KdTree(const PointCloud& cloud, std::size_t bucket_size = kDefaultBucket);

  std::size_t size() const { return order_.size(); }
  std::size_t bucket_size() const { return bucket_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Point indices, grouped so that each leaf owns a contiguous range.
  const std::vector<std::uint32_t>& order() const { return order_; }
  std::size_t depth() const;

  /// Same result as knn_bruteforce(cloud, k), bit for bit. `cloud` must be
  /// the cloud the tree was built from.
  NeighborTable knn(const PointCloud& cloud, std::size_t k) const;

 private:
  std::int32_t build(const PointMatrix& points, std::uint32_t begin,
                     std::uint32_t end, std::size_t depth);

  std::size_t bucket_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

inline KdTree kdtree_build(const PointCloud& cloud) { return KdTree(cloud); }

inline NeighborTable kdtree_knn(const KdTree& tree, const PointCloud& cloud,
                                std::size_t k) {
  return tree.knn(cloud, k);
}

/// Dispatch on the configured backend.
NeighborTable find_neighbors(const PointCloud& cloud, SearchBackend backend,
                             std::size_t k, double radius);

}  // namespace cloudsample::nn
