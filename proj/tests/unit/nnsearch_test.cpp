#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cloudsample/nnsearch.hpp"
#include "test_support.hpp"

namespace cloudsample::nn {
namespace {

using testing::cloud_of;
using testing::knn_oracle;
using testing::rows_of;

using Rows = std::vector<std::vector<int>>;

TEST(KnnBruteforce, SelfThenNearest) {
  const auto cloud = cloud_of({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}});
  EXPECT_EQ(rows_of(knn_bruteforce(cloud, 2))[0], (std::vector<int>{0, 1}));
}

TEST(KnnBruteforce, SinglePointIsItsOwnNeighbor) {
  EXPECT_EQ(rows_of(knn_bruteforce(cloud_of({{4, 5, 6}}), 1)), (Rows{{0}}));
}

TEST(KnnBruteforce, MatchesFullSortOracle) {
  const auto cloud = testing::uniform_cloud(10, 3);
  EXPECT_EQ(rows_of(knn_bruteforce(cloud, 3)), knn_oracle(cloud, 3));
}

TEST(KnnBruteforce, TiesBreakToLowerIndex) {
  // Points 1 and 2 are equidistant from point 0.
  const auto cloud = cloud_of({{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, -1}});
  EXPECT_EQ(rows_of(knn_bruteforce(cloud, 4))[0], (std::vector<int>{0, 1, 2, 3}));
}

TEST(KnnBruteforce, RejectsKAboveCount) {
  try {
    knn_bruteforce(cloud_of({{0, 0, 0}}), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::KTooLarge);
  }
}

TEST(KdTree, SinglePointIsOneLeaf) {
  const KdTree tree(cloud_of({{1, 2, 3}}));
  ASSERT_EQ(tree.nodes().size(), 1u);
  EXPECT_TRUE(tree.nodes()[0].is_leaf());
  EXPECT_EQ(tree.depth(), 1u);
}

TEST(KdTree, RejectsEmptyCloud) {
  try {
    KdTree tree{PointCloud()};
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCloud);
  }
}

TEST(KdTree, EightPointsOnALineStayShallow) {
  PointMatrix line(8, 3);
  for (int i = 0; i < 8; ++i) line.row(i) << float(i), 0, 0;
  const PointCloud cloud(line);
  // Default bucket holds all eight points.
  EXPECT_EQ(KdTree(cloud).depth(), 1u);
  // One point per leaf: a balanced tree over 8 points has 4 levels.
  EXPECT_LE(KdTree(cloud, 1).depth(), static_cast<std::size_t>(std::ceil(std::log2(8.0))) + 1);
}

TEST(KdTree, DepthIsLogarithmic) {
  const auto cloud = testing::uniform_cloud(5000, 8);
  const KdTree tree(cloud);
  const double leaves = std::ceil(5000.0 / double(tree.bucket_size()));
  EXPECT_LE(tree.depth(), static_cast<std::size_t>(std::ceil(std::log2(leaves))) + 2);
}

void check_structure(const KdTree& tree, const PointCloud& cloud) {
  // Leaves in left-to-right order cover every point exactly once.
  std::vector<std::uint32_t> visited;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const auto& node = tree.nodes()[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.is_leaf()) {
      for (auto s = node.begin; s < node.end; ++s) visited.push_back(tree.order()[s]);
      continue;
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  std::sort(visited.begin(), visited.end());
  std::vector<std::uint32_t> all(cloud.size());
  std::iota(all.begin(), all.end(), 0u);
  ASSERT_EQ(visited, all);

  // Split invariant on every internal node.
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) continue;
    const auto& left = tree.nodes()[static_cast<std::size_t>(node.left)];
    const auto& right = tree.nodes()[static_cast<std::size_t>(node.right)];
    for (auto s = left.begin; s < left.end; ++s)
      EXPECT_LE(cloud.point(tree.order()[s])(node.axis), node.split);
    for (auto s = right.begin; s < right.end; ++s)
      EXPECT_GE(cloud.point(tree.order()[s])(node.axis), node.split);
  }
}

TEST(KdTree, HoldsEveryPointOnceAndRespectsSplits) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    check_structure(KdTree(testing::uniform_cloud(700, seed), 4), testing::uniform_cloud(700, seed));
    check_structure(KdTree(testing::lattice_cloud(300, seed), 2), testing::lattice_cloud(300, seed));
  }
}

TEST(KdTree, AxesCycleByDepth) {
  const KdTree tree(testing::uniform_cloud(200, 1), 8);
  const auto& nodes = tree.nodes();
  EXPECT_EQ(nodes[0].axis, 0);
  EXPECT_EQ(nodes[static_cast<std::size_t>(nodes[0].left)].axis, 1);
  const auto& grandchild = nodes[static_cast<std::size_t>(nodes[0].left)];
  EXPECT_EQ(nodes[static_cast<std::size_t>(grandchild.left)].axis, 2);
}

TEST(KdTree, BuildIsDeterministic) {
  const auto cloud = testing::lattice_cloud(500, 4);
  const KdTree a(cloud), b(cloud);
  EXPECT_EQ(a.order(), b.order());
}

TEST(KdTreeKnn, MatchesBruteForceOnSmallExamples) {
  const auto line = cloud_of({{0, 0, 0}, {1, 0, 0}, {3, 0, 0}});
  EXPECT_EQ(kdtree_knn(kdtree_build(line), line, 2), knn_bruteforce(line, 2));
  const auto single = cloud_of({{4, 5, 6}});
  EXPECT_EQ(kdtree_knn(kdtree_build(single), single, 1), knn_bruteforce(single, 1));
  const auto random = testing::uniform_cloud(10, 3);
  EXPECT_EQ(kdtree_knn(kdtree_build(random), random, 3), knn_bruteforce(random, 3));
}

TEST(KdTreeKnn, GridWithManyTiesMatchesOracle) {
  const auto grid = testing::grid_cloud(4);
  const KdTree tree(grid, 2);
  EXPECT_EQ(rows_of(tree.knn(grid, 7)), knn_oracle(grid, 7));
}

TEST(KdTreeKnn, FullNeighborhoodIsSortedPermutation) {
  const auto cloud = testing::uniform_cloud(40, 12);
  const auto table = KdTree(cloud, 3).knn(cloud, 40);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto row = table.row(i);
    std::vector<int> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> all(40);
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(sorted, all);
    for (std::size_t j = 1; j < row.size(); ++j)
      EXPECT_LE(testing::sq_dist(cloud, i, std::size_t(row[j - 1])),
                testing::sq_dist(cloud, i, std::size_t(row[j])));
  }
}

TEST(KdTreeKnn, RejectsKAboveCount) {
  const auto cloud = testing::uniform_cloud(5, 1);
  EXPECT_THROW(KdTree(cloud).knn(cloud, 6), Error);
}

TEST(KdTreeKnn, PropertyEqualsBruteForce) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(n, 20);
    const std::size_t bucket = 1 + rng() % 20;
    const auto cloud = trial % 2 ? testing::uniform_cloud(n, rng()) : testing::lattice_cloud(n, rng(), 3);
    ASSERT_EQ(KdTree(cloud, bucket).knn(cloud, k), knn_bruteforce(cloud, k))
        << "n=" << n << " k=" << k << " bucket=" << bucket;
  }
}

TEST(BallQuery, PadsMissingNeighbors) {
  const auto cloud = cloud_of({{0, 0, 0}, {5, 0, 0}});
  EXPECT_EQ(rows_of(ball_query(cloud, 2, 2))[0], (std::vector<int>{0, -1}));
}

TEST(BallQuery, KeepsNearestWithinRadius) {
  const auto cloud = cloud_of({{0, 0, 0}, {1, 0, 0}, {1.5, 0, 0}});
  EXPECT_EQ(rows_of(ball_query(cloud, 2, 2))[0], (std::vector<int>{0, 1}));
}

TEST(BallQuery, MatchesRadiusOracle) {
  const auto cloud = testing::uniform_cloud(50, 6, 0, 1);
  EXPECT_EQ(rows_of(ball_query(cloud, 0.3, 8)), testing::radius_oracle(cloud, 0.3, 8));
}

TEST(BallQuery, RadiusBoundaryIsInclusive) {
  const auto cloud = cloud_of({{0, 0, 0}, {2, 0, 0}, {0, 2.5, 0}});
  EXPECT_EQ(rows_of(ball_query(cloud, 2, 3))[0], (std::vector<int>{0, 1, -1}));
}

TEST(BallQuery, RejectsBadArguments) {
  const auto cloud = testing::uniform_cloud(4, 1);
  EXPECT_THROW(ball_query(cloud, 1, 5), Error);
  EXPECT_THROW(ball_query(cloud, 0, 1), Error);
}

TEST(BallQuery, PropertyMatchesOracleAcrossScales) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(n, 16);
    const double radius = std::ldexp(1.0, int(rng() % 10) - 6);  // 1/64 .. 8
    const auto cloud = trial % 3 == 0 ? testing::lattice_cloud(n, rng(), 5)
                                      : testing::uniform_cloud(n, rng(), -2, 2);
    ASSERT_EQ(rows_of(ball_query(cloud, radius, k)), testing::radius_oracle(cloud, radius, k))
        << "n=" << n << " k=" << k << " radius=" << radius;
  }
}

TEST(BallQuery, PropertyHugeRadiusEqualsKnn) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const std::size_t k = 1 + rng() % n;
    const auto cloud = testing::uniform_cloud(n, rng());
    ASSERT_EQ(ball_query(cloud, 1e3, k), knn_bruteforce(cloud, k));
  }
}

TEST(BallQuery, PropertyNeverExceedsRadius) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cloud = testing::uniform_cloud(150, rng());
    const double radius = 0.05 + 0.5 * double(rng() % 100) / 100.0;
    const auto table = ball_query(cloud, radius, 12);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      for (auto idx : table.row(i))
        if (idx >= 0) {
          const auto d = (cloud.point(i).cast<double>() - cloud.point(std::size_t(idx)).cast<double>()).norm();
          EXPECT_LE(d, radius * (1 + 1e-6));
        }
  }
}

TEST(AllBackends, PropertyTablesSatisfyInvariants) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 120;
    const std::size_t k = 1 + rng() % n;
    const auto cloud = trial % 2 ? testing::lattice_cloud(n, rng(), 3) : testing::uniform_cloud(n, rng());
    for (auto backend : {SearchBackend::BallQuery, SearchBackend::KnnBruteforce, SearchBackend::KdTree}) {
      const auto table = find_neighbors(cloud, backend, k, 0.4);
      EXPECT_NO_THROW(validate_neighbor_table(table, n));
      for (std::size_t i = 0; i < n; ++i) {
        // The first neighbor is at distance zero: i itself, or a lower-index duplicate.
        const auto first = std::size_t(table.at(i, 0));
        EXPECT_EQ(testing::sq_dist(cloud, i, first), 0.0f);
        EXPECT_LE(first, i);
      }
    }
  }
}

TEST(AllBackends, SelfIsFirstWithoutDuplicates) {
  const auto cloud = testing::uniform_cloud(300, 71);
  for (auto backend : {SearchBackend::BallQuery, SearchBackend::KnnBruteforce, SearchBackend::KdTree}) {
    const auto table = find_neighbors(cloud, backend, 1, 2.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_EQ(table.at(i, 0), int(i));
  }
}

}  // namespace
}  // namespace cloudsample::nn
