#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "cloudsample/samplers.hpp"
#include "test_support.hpp"

namespace cloudsample::sampling {
namespace {

using testing::cloud_of;

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  return all;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

TEST(RandomSample, FullDrawIsPermutation) {
  const auto cloud = testing::uniform_cloud(64, 2);
  EXPECT_EQ(sorted(random_sample(cloud, 64, 3).indices), iota_indices(64));
}

TEST(RandomSample, SameSeedSameOutput) {
  const auto cloud = testing::uniform_cloud(1024, 1);
  const auto a = random_sample(cloud, 512, 7);
  const auto b = random_sample(cloud, 512, 7);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.cloud, b.cloud);
  EXPECT_NE(random_sample(cloud, 512, 8).indices, a.indices);
}

TEST(RandomSample, SingleDrawIsUniform) {
  const auto cloud = testing::uniform_cloud(4, 0);
  std::array<int, 4> counts{};
  for (std::uint64_t seed = 0; seed < 10000; ++seed) ++counts[random_sample(cloud, 1, seed).indices[0]];
  // Binomial(10000, 1/4): sigma = sqrt(10000 * 0.25 * 0.75).
  const double sigma = std::sqrt(10000 * 0.25 * 0.75);
  for (int c : counts) EXPECT_NEAR(c, 2500, 3 * sigma);
}

TEST(RandomSample, CloudMatchesIndices) {
  const auto cloud = testing::uniform_cloud(100, 4);
  const auto result = random_sample(cloud, 30, 5);
  EXPECT_EQ(result.cloud, cloud.gather(result.indices));
  EXPECT_EQ(std::set<std::size_t>(result.indices.begin(), result.indices.end()).size(), 30u);
}

TEST(RandomSample, RejectsBadCount) {
  const auto cloud = testing::uniform_cloud(5, 0);
  EXPECT_THROW(random_sample(cloud, 0, 0), Error);
  try {
    random_sample(cloud, 6, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MTooLarge);
  }
}

TEST(Fps, OppositeCornerIsFarthest) {
  const auto square = cloud_of({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
  EXPECT_EQ(fps(square, 2, 0).indices, (std::vector<std::size_t>{0, 3}));
}

TEST(Fps, FullDrawIsPermutation) {
  const auto cloud = testing::uniform_cloud(50, 9);
  const auto result = fps(cloud, 50, 0);
  EXPECT_EQ(result.indices[0], 0u);
  EXPECT_EQ(sorted(result.indices), iota_indices(50));
}

TEST(Fps, MatchesRecomputeOracle) {
  const auto cloud = testing::uniform_cloud(20, 13);
  EXPECT_EQ(fps(cloud, 5, 0).indices, testing::fps_oracle(cloud, 5, 0));
}

TEST(Fps, TiesGoToLowerIndex) {
  // From the center, all four corners are equidistant.
  const auto cloud = cloud_of({{0, 0, 0}, {1, 1, 0}, {-1, 1, 0}, {1, -1, 0}, {-1, -1, 0}});
  EXPECT_EQ(fps(cloud, 2, 0).indices, (std::vector<std::size_t>{0, 1}));
}

TEST(Fps, HonorsStartIndex) {
  const auto cloud = testing::uniform_cloud(30, 3);
  EXPECT_EQ(fps(cloud, 6, 17).indices, testing::fps_oracle(cloud, 6, 17));
}

TEST(Fps, RejectsBadArguments) {
  const auto cloud = testing::uniform_cloud(5, 0);
  EXPECT_THROW(fps(cloud, 6, 0), Error);
  try {
    fps(cloud, 2, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadStart);
  }
}

TEST(Fps, PropertyMatchesOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 80;
    const std::size_t m = 1 + rng() % n;
    const std::size_t start = rng() % n;
    const auto cloud = trial % 2 ? testing::lattice_cloud(n, rng(), 3) : testing::uniform_cloud(n, rng());
    ASSERT_EQ(fps(cloud, m, start).indices, testing::fps_oracle(cloud, m, start))
        << "n=" << n << " m=" << m << " start=" << start;
  }
}

TEST(Fps, PropertyDeterministic) {
  const auto cloud = testing::lattice_cloud(400, 2);
  EXPECT_EQ(fps(cloud, 100, 3).indices, fps(cloud, 100, 3).indices);
}

TEST(Fps, CoversBetterThanRandom) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cloud = testing::uniform_cloud(1024, 1000 + seed);
    wins += testing::min_pairwise_distance(fps(cloud, 64, 0).cloud) >=
            testing::min_pairwise_distance(random_sample(cloud, 64, seed).cloud);
  }
  EXPECT_GE(wins, 19);
}

TEST(FpsChunked, OneChunkEqualsExact) {
  const auto cloud = testing::uniform_cloud(200, 5);
  EXPECT_EQ(fps_chunked(cloud, 40, 1).indices, fps(cloud, 40, 0).indices);
}

TEST(FpsChunked, TwoChunksComposeFromOracle) {
  const auto cloud = testing::uniform_cloud(8, 6);
  std::vector<std::size_t> expected = testing::fps_oracle(cloud.gather(std::vector<std::size_t>{0, 1, 2, 3}), 2, 0);
  for (auto i : testing::fps_oracle(cloud.gather(std::vector<std::size_t>{4, 5, 6, 7}), 2, 0))
    expected.push_back(i + 4);
  EXPECT_EQ(fps_chunked(cloud, 4, 2).indices, expected);
}

TEST(FpsChunked, UnevenSplitFavorsLeadingChunks) {
  // n=10, M=3: chunks of 4, 3, 3 points. m=5: picks 2, 2, 1.
  const auto cloud = testing::uniform_cloud(10, 8);
  const auto idx = fps_chunked(cloud, 5, 3).indices;
  ASSERT_EQ(idx.size(), 5u);
  EXPECT_EQ(idx[0], 0u);
  EXPECT_LT(idx[1], 4u);
  EXPECT_EQ(idx[2], 4u);
  EXPECT_GE(idx[3], 4u);
  EXPECT_LT(idx[3], 7u);
  EXPECT_EQ(idx[4], 7u);
}

TEST(FpsChunked, HalvesLargeCloud) {
  const auto cloud = testing::uniform_cloud(8192, 9);
  const auto result = fps_chunked(cloud, 4096, 8);
  EXPECT_EQ(result.cloud.size(), 4096u);
  EXPECT_EQ(std::set<std::size_t>(result.indices.begin(), result.indices.end()).size(), 4096u);
}

TEST(FpsChunked, RejectsTooManyChunks) {
  const auto cloud = testing::uniform_cloud(4, 0);
  try {
    fps_chunked(cloud, 2, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadChunkCount);
  }
  EXPECT_THROW(fps_chunked(cloud, 2, 0), Error);
  EXPECT_THROW(fps_chunked(cloud, 5, 2), Error);
}

TEST(FpsChunked, PropertyEachChunkIsExactFps) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 120;
    const std::size_t chunks = 1 + rng() % n;
    const std::size_t m = 1 + rng() % n;
    const auto cloud = testing::uniform_cloud(n, rng());
    std::vector<std::size_t> expected;
    std::size_t begin = 0;
    for (std::size_t j = 0; j < chunks; ++j) {
      const std::size_t size = n / chunks + (j < n % chunks);
      const std::size_t picks = m / chunks + (j < m % chunks);
      std::vector<std::size_t> rows(size);
      std::iota(rows.begin(), rows.end(), begin);
      if (picks > 0)
        for (auto i : testing::fps_oracle(cloud.gather(rows), picks, 0)) expected.push_back(begin + i);
      begin += size;
    }
    ASSERT_EQ(fps_chunked(cloud, m, chunks).indices, expected)
        << "n=" << n << " m=" << m << " chunks=" << chunks;
  }
}

TEST(CropMaxPoints, SmallCloudUnchanged) {
  const auto cloud = testing::uniform_cloud(100, 1);
  EXPECT_EQ(crop_max_points(cloud, 8192, 0), cloud);
  EXPECT_EQ(crop_max_points(cloud, 100, 0), cloud);
}

TEST(CropMaxPoints, LargeCloudCutToCapFromInputRows) {
  const auto cloud = testing::uniform_cloud(10000, 2);
  const auto cropped = crop_max_points(cloud, 8192, 3);
  ASSERT_EQ(cropped.size(), 8192u);
  std::set<std::array<float, 3>> rows;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    rows.insert({p(0), p(1), p(2)});
  }
  for (std::size_t i = 0; i < cropped.size(); ++i) {
    const auto p = cropped.point(i);
    EXPECT_TRUE(rows.count({p(0), p(1), p(2)}));
  }
}

}  // namespace
}  // namespace cloudsample::sampling
