#pragma once

#include "cloudsample/autodiff.hpp"
#include "cloudsample/config.hpp"
#include "cloudsample/types.hpp"

namespace cloudsample::loss {

/// Two-sided mean squared nearest-neighbor distance between an n x 3 input
/// and an m x 3 sample. Each min routes its gradient through one argmin
/// (lowest index on ties). Throws EmptyCloud.
ad::Tensor subset_loss(const ad::Tensor& input, const ad::Tensor& sampled);
double subset_loss(const PointCloud& input, const PointCloud& sampled);

/// Sum over ordered pairs i != j of |cos(v_i, v_j)|, v the rows or columns
/// of `soft`. A zero vector has cosine 0 with everything. Throws
/// DegenerateAxis with fewer than two vectors.
ad::Tensor cosine_loss(const ad::Tensor& soft, CosineAxis axis = CosineAxis::Rows);

struct LossBreakdown {
  double total = 0;
  double task = 0;
  double subset = 0;
  double cosine = 0;
  double alpha = 1;
  double beta = 1;
};

struct LossTerms {
  ad::Tensor total;
  LossBreakdown breakdown;
};

/// task + alpha * subset + beta * cosine.
LossTerms total_loss(const ad::Tensor& task, const ad::Tensor& subset,
                     const ad::Tensor& cosine, double alpha, double beta);
LossBreakdown total_loss(double task, double subset, double cosine, double alpha,
                         double beta);

}  // namespace cloudsample::loss
