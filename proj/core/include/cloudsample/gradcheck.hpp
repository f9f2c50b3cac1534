#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cloudsample/config.hpp"

/// Finite-difference gradient checks for every differentiable op and for the
/// complete sampler objective.
namespace cloudsample::gradcheck {

struct CheckRow {
  std::string name;
  double max_relative_error = 0;
  double threshold = 0;
  /// Rows with `enforced == false` are reported but never fail a run.
  bool enforced = true;
  bool passed() const { return !enforced || max_relative_error < threshold; }
};

inline constexpr double kOpThreshold = 1e-4;
inline constexpr double kEndToEndThreshold = 1e-3;
/// Denominator floor of the end-to-end relative error. Some entries have an
/// exactly zero gradient (a bias shift that the column softmax cancels);
/// there the central difference returns one ulp of the loss over 2 eps.
inline constexpr double kEndToEndFloor = 1e-4;

/// One row per op, each with random inputs kept away from kinks and ties.
std::vector<CheckRow> check_ops(double eps = 1e-6, std::uint64_t seed = 0);

/// Shape of the end-to-end check: n=16, k=2, c=8, one attention layer,
/// m=4, three-class head.
CasNetConfig end_to_end_config(SamplingMode mode);

/// Gradient of task + alpha*subset + beta*cosine with respect to every
/// sampler and head weight, all drawn uniformly from [-1, 1]. The hard mode row is informational: its
/// forward pass is piecewise constant, so finite differences cannot see
/// the straight-through gradient.
CheckRow check_end_to_end(SamplingMode mode, double eps = 1e-6, std::uint64_t seed = 0);

}  // namespace cloudsample::gradcheck
