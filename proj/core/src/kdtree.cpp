#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

#include "cloudsample/nnsearch.hpp"

namespace cloudsample::nn {

KdTree::KdTree(const PointCloud& cloud, std::size_t bucket_size)
    : bucket_(std::max<std::size_t>(1, bucket_size)) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "cannot build kd-tree over no points");
  order_.resize(cloud.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * (cloud.size() / bucket_ + 1));
  build(cloud.points(), 0, static_cast<std::uint32_t>(cloud.size()), 0);
}

std::int32_t KdTree::build(const PointMatrix& points, std::uint32_t begin,
                           std::uint32_t end, std::size_t depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{.begin = begin, .end = end});
  if (end - begin <= bucket_) return id;

  const auto axis = static_cast<std::uint8_t>(depth % 3);
  const std::uint32_t mid = begin + (end - begin) / 2;
  // Coordinate first, index second: equal coordinates stay in index order and
  // the partition is reproducible.
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const float ca = points(a, axis);
                     const float cb = points(b, axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  const float split = points(order_[mid], axis);
  const std::int32_t left = build(points, begin, mid, depth + 1);
  const std::int32_t right = build(points, mid, end, depth + 1);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.axis = axis;
  node.split = split;
  return id;
}

std::size_t KdTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 1}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.is_leaf()) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return deepest;
}

namespace {

using Candidate = std::pair<float, NeighborTable::Index>;

struct Search {
  const std::vector<KdTree::Node>& nodes;
  const std::vector<std::uint32_t>& order;
  const float* points;
  const float* query;
  std::size_t k;
  // Max-heap on (distance, index): top is the current worst neighbor.
  std::priority_queue<Candidate> heap;

  void offer(float d, NeighborTable::Index idx) {
    if (heap.size() < k) {
      heap.emplace(d, idx);
    } else if (Candidate{d, idx} < heap.top()) {
      heap.pop();
      heap.emplace(d, idx);
    }
  }

  void visit(std::int32_t id) {
    const auto& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      for (std::uint32_t s = node.begin; s < node.end; ++s) {
        const std::uint32_t idx = order[s];
        offer(squared_distance(query, points + 3 * idx),
              static_cast<NeighborTable::Index>(idx));
      }
      return;
    }
    const float diff = query[node.axis] - node.split;
    const bool go_left = diff < 0;
    visit(go_left ? node.left : node.right);
    // Equal bound still visits: a lower index at the same distance may sit
    // on the far side.
    if (heap.size() < k || diff * diff <= heap.top().first)
      visit(go_left ? node.right : node.left);
  }
};

}  // namespace

NeighborTable KdTree::knn(const PointCloud& cloud, std::size_t k) const {
  const std::size_t n = cloud.size();
  if (n != order_.size())
    throw Error(Errc::ShapeMismatch, "kd-tree was built over a different cloud");
  if (k < 1 || k > n)
    throw Error(Errc::KTooLarge,
                "k=" + std::to_string(k) + " with " + std::to_string(n) + " points");
  NeighborTable table(n, k);
  const float* p = cloud.points().data();
  std::vector<Candidate> sorted;
  sorted.reserve(k);
  for (std::size_t i = 0; i < n; ++i) {
    Search search{nodes_, order_, p, p + 3 * i, k, {}};
    search.visit(0);
    sorted.clear();
    while (!search.heap.empty()) {
      sorted.push_back(search.heap.top());
      search.heap.pop();
    }
    auto row = table.row(i);
    for (std::size_t j = 0; j < k; ++j) row[j] = sorted[k - 1 - j].second;
  }
  return table;
}

}  // namespace cloudsample::nn
