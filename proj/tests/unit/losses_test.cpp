#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cloudsample/losses.hpp"
#include "test_support.hpp"

namespace cloudsample::loss {
namespace {

using ad::Matrix;
using ad::Tensor;
using testing::cloud_of;

TEST(SubsetLoss, IdenticalCloudsGiveZero) {
  const auto cloud = testing::uniform_cloud(15, 1);
  EXPECT_EQ(subset_loss(cloud, cloud), 0.0);
  const Tensor p = Tensor::constant(cloud.to_double());
  EXPECT_EQ(subset_loss(p, p).item(), 0.0);
}

TEST(SubsetLoss, SinglePairClosedForm) {
  EXPECT_DOUBLE_EQ(subset_loss(cloud_of({{0, 0, 0}}), cloud_of({{1, 0, 0}})), 2.0);
}

TEST(SubsetLoss, MatchesDoubleLoopOracle) {
  const auto input = testing::uniform_cloud(20, 2);
  const auto sampled = testing::uniform_cloud(7, 3);
  const double expected = testing::chamfer_oracle(input.to_double(), sampled.to_double());
  EXPECT_NEAR(subset_loss(input, sampled), expected, 1e-6);
  EXPECT_NEAR(subset_loss(Tensor::constant(input.to_double()), Tensor::constant(sampled.to_double()))
                  .item(),
              expected, 1e-6);
}

TEST(SubsetLoss, PropertyMatchesOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = testing::random_matrix(Eigen::Index(1 + rng() % 40), 3, rng(), -3, 3);
    const auto b = testing::random_matrix(Eigen::Index(1 + rng() % 40), 3, rng(), -3, 3);
    EXPECT_NEAR(subset_loss(Tensor::constant(a), Tensor::constant(b)).item(),
                testing::chamfer_oracle(a, b), 1e-9);
  }
}

TEST(SubsetLoss, GradientMatchesFiniteDifferences) {
  Tensor input = Tensor::parameter(testing::random_matrix(12, 3, 5));
  Tensor sampled = Tensor::parameter(testing::random_matrix(5, 3, 6));
  std::array<Tensor, 2> params{input, sampled};
  EXPECT_LT(ad::finite_diff_check([&] { return subset_loss(input, sampled); }, params), 1e-6);
}

TEST(SubsetLoss, RejectsEmpty) {
  try {
    subset_loss(PointCloud(), cloud_of({{0, 0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCloud);
  }
}

TEST(CosineLoss, OrthogonalRowsGiveZero) {
  const Tensor eye = Tensor::constant(Matrix::Identity(4, 4));
  EXPECT_EQ(cosine_loss(eye, CosineAxis::Rows).item(), 0.0);
  EXPECT_EQ(cosine_loss(eye, CosineAxis::Columns).item(), 0.0);
}

TEST(CosineLoss, IdenticalRowsCountBothOrders) {
  Matrix v(2, 3);
  v << 1, 2, 3, 1, 2, 3;
  EXPECT_NEAR(cosine_loss(Tensor::constant(v), CosineAxis::Rows).item(), 2.0, 1e-15);
}

TEST(CosineLoss, MatchesDoubleLoopOracle) {
  const Matrix v = testing::random_matrix(4, 3, 7);
  EXPECT_NEAR(cosine_loss(Tensor::constant(v), CosineAxis::Rows).item(), testing::cosine_oracle(v),
              1e-6);
  EXPECT_NEAR(cosine_loss(Tensor::constant(v), CosineAxis::Columns).item(),
              testing::cosine_oracle(v.transpose()), 1e-6);
}

TEST(CosineLoss, ZeroVectorContributesNothing) {
  Matrix v = testing::random_matrix(3, 4, 8, 0.1, 1);
  const double without = testing::cosine_oracle(v);
  Matrix padded(4, 4);
  padded << v, Eigen::RowVector4d::Zero();
  EXPECT_NEAR(cosine_loss(Tensor::constant(padded), CosineAxis::Rows).item(), without, 1e-12);
}

TEST(CosineLoss, PropertyBoundedByPairCount) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rows = Eigen::Index(2 + rng() % 12);
    const Matrix v = testing::random_matrix(rows, Eigen::Index(1 + rng() % 6), rng());
    const double value = cosine_loss(Tensor::constant(v), CosineAxis::Rows).item();
    EXPECT_GE(value, 0.0);
    EXPECT_LE(value, double(rows * (rows - 1)) + 1e-9);
    EXPECT_NEAR(value, testing::cosine_oracle(v), 1e-9);
  }
}

TEST(CosineLoss, RejectsSingleVector) {
  try {
    cosine_loss(Tensor::constant(Matrix::Ones(1, 3)), CosineAxis::Rows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateAxis);
  }
  EXPECT_THROW(cosine_loss(Tensor::constant(Matrix::Ones(3, 1)), CosineAxis::Columns), Error);
}

TEST(TotalLoss, WeightedSum) {
  const auto b = total_loss(1.0, 2.0, 3.0, 1, 1);
  EXPECT_EQ(b.total, 6.0);
  EXPECT_EQ(total_loss(1.0, 2.0, 3.0, 1, 0).total, 3.0);
  const auto t = total_loss(Tensor::scalar(1), Tensor::scalar(2), Tensor::scalar(3), 0.5, 2);
  EXPECT_DOUBLE_EQ(t.total.item(), 8.0);
  EXPECT_DOUBLE_EQ(t.breakdown.subset, 2.0);
  EXPECT_DOUBLE_EQ(t.breakdown.alpha, 0.5);
}

TEST(TotalLoss, GradientIsWeightedSumOfParts) {
  Tensor x = Tensor::parameter(testing::random_matrix(6, 3, 10, 0.1, 1));
  const Tensor ref = Tensor::constant(testing::random_matrix(9, 3, 11));
  const double alpha = 0.7, beta = 1.3;
  auto task = [&] { return ad::mean(ad::mul(x, x)); };
  auto subset = [&] { return subset_loss(ref, x); };
  auto cosine = [&] { return cosine_loss(x, CosineAxis::Rows); };

  Matrix expected = Matrix::Zero(6, 3);
  for (auto [part, weight] : {std::pair<std::function<Tensor()>, double>{task, 1.0},
                              {subset, alpha},
                              {cosine, beta}}) {
    x.zero_grad();
    ad::backward(part());
    expected += weight * x.grad();
  }
  x.zero_grad();
  ad::backward(total_loss(task(), subset(), cosine(), alpha, beta).total);
  EXPECT_TRUE(x.grad().isApprox(expected, 1e-12));

  std::array<Tensor, 1> params{x};
  EXPECT_LT(ad::finite_diff_check(
                [&] { return total_loss(task(), subset(), cosine(), alpha, beta).total; }, params),
            1e-5);
}

}  // namespace
}  // namespace cloudsample::loss
