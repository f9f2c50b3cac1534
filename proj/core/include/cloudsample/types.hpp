#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cloudsample/error.hpp"

namespace cloudsample {

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PointMatrix = Eigen::Matrix<float, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// n x 3 coordinates. Construction does not validate; call validate_cloud().
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(PointMatrix points) : points_(std::move(points)) {}
  explicit PointCloud(std::span<const std::array<float, 3>> rows);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  bool empty() const { return points_.rows() == 0; }
  const PointMatrix& points() const { return points_; }
  Eigen::RowVector3f point(std::size_t i) const {
    return points_.row(static_cast<Eigen::Index>(i));
  }

  /// Rows `indices[j]` of this cloud, in order.
  PointCloud gather(std::span<const std::size_t> indices) const;

  /// Coordinates widened to double, n x 3.
  RowMatrix<double> to_double() const;

  bool operator==(const PointCloud& other) const;

 private:
  PointMatrix points_;
};

/// Throws EmptyCloud or NonFiniteCoordinate(row).
void validate_cloud(const PointCloud& cloud);

/// floor(n / ratio); throws InvalidRatio unless 1 <= ratio <= n.
std::size_t ratio_to_count(std::size_t n, std::size_t ratio);

/// n x k neighbor indices, padded with kSentinel.
class NeighborTable {
 public:
  using Index = std::int32_t;
  static constexpr Index kSentinel = -1;

  NeighborTable() = default;
  NeighborTable(std::size_t n, std::size_t k)
      : n_(n), k_(k), indices_(n * k, kSentinel) {}

  std::size_t rows() const { return n_; }
  std::size_t k() const { return k_; }

  std::span<Index> row(std::size_t i) { return {indices_.data() + i * k_, k_}; }
  std::span<const Index> row(std::size_t i) const {
    return {indices_.data() + i * k_, k_};
  }
  Index at(std::size_t i, std::size_t j) const { return indices_[i * k_ + j]; }

  const std::vector<Index>& data() const { return indices_; }

  bool operator==(const NeighborTable&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<Index> indices_;
};

/// Checks the three table invariants against a source cloud of `source_size`
/// points. Throws IndexOutOfRange with the offending row.
void validate_neighbor_table(const NeighborTable& table,
                             std::size_t source_size);

/// Column-stochastic n x m selection operator.
template <typename Scalar>
struct SoftSamplingMatrix {
  RowMatrix<Scalar> values;

  std::size_t input_size() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t output_size() const { return static_cast<std::size_t>(values.cols()); }
};

/// Binary n x m matrix with exactly one 1 per column, stored as the selected
/// row of each column.
class HardSamplingMatrix {
 public:
  HardSamplingMatrix(std::size_t input_size, std::vector<std::size_t> selected);

  std::size_t input_size() const { return n_; }
  std::size_t output_size() const { return selected_.size(); }
  const std::vector<std::size_t>& selected() const { return selected_; }

  template <typename Scalar>
  RowMatrix<Scalar> dense() const {
    RowMatrix<Scalar> out = RowMatrix<Scalar>::Zero(
        static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(selected_.size()));
    for (std::size_t j = 0; j < selected_.size(); ++j)
      out(static_cast<Eigen::Index>(selected_[j]), static_cast<Eigen::Index>(j)) = 1;
    return out;
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> selected_;
};

/// Per-column argmax of a soft matrix; ties go to the lower row.
template <typename Scalar>
HardSamplingMatrix harden(const SoftSamplingMatrix<Scalar>& soft) {
  const auto& v = soft.values;
  const auto cols = static_cast<std::size_t>(v.cols());
  std::vector<std::size_t> selected(cols, 0);
  if (v.rows() == 0) throw Error(Errc::EmptyCloud, "cannot harden a matrix with no rows");
  // Row-major scan; strict comparison keeps the first (lowest) row on ties.
  std::vector<Scalar> best(v.data(), v.data() + cols);
  for (Eigen::Index i = 1; i < v.rows(); ++i) {
    const Scalar* row = v.data() + i * v.cols();
    for (std::size_t j = 0; j < cols; ++j)
      if (row[j] > best[j]) {
        best[j] = row[j];
        selected[j] = static_cast<std::size_t>(i);
      }
  }
  return HardSamplingMatrix(static_cast<std::size_t>(v.rows()), std::move(selected));
}

struct ClassificationMetrics {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// One benchmark row.
struct RunRecord {
  std::string method;
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::optional<std::size_t> oa_layers;
  std::optional<std::size_t> k;
  double time_per_batch_s = 0;
  double time_per_sample_s = 0;
  std::optional<ClassificationMetrics> metrics;
};

}  // namespace cloudsample
