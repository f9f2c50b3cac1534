#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_set>

#include "cloudsample/types.hpp"

namespace cloudsample {

PointCloud::PointCloud(std::span<const std::array<float, 3>> rows)
    : points_(static_cast<Eigen::Index>(rows.size()), 3) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < 3; ++c)
      points_(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
}

PointCloud PointCloud::gather(std::span<const std::size_t> indices) const {
  PointMatrix out(static_cast<Eigen::Index>(indices.size()), 3);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= size())
      throw Error(Errc::IndexOutOfRange,
                  "gather index " + std::to_string(indices[j]) + " >= " +
                      std::to_string(size()));
    out.row(static_cast<Eigen::Index>(j)) =
        points_.row(static_cast<Eigen::Index>(indices[j]));
  }
  return PointCloud(std::move(out));
}

RowMatrix<double> PointCloud::to_double() const {
  return points_.cast<double>();
}

bool PointCloud::operator==(const PointCloud& other) const {
  if (points_.rows() != other.points_.rows()) return false;
  // Bitwise, so that -0.0 and NaN payloads are not conflated.
  return std::equal(points_.data(), points_.data() + points_.size(),
                    other.points_.data(), [](float a, float b) {
                      return std::bit_cast<std::uint32_t>(a) ==
                             std::bit_cast<std::uint32_t>(b);
                    });
}

void validate_cloud(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "point cloud has no points");
  const auto& p = cloud.points();
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      if (!std::isfinite(p(i, c)))
        throw Error(Errc::NonFiniteCoordinate, "non-finite coordinate",
                    static_cast<std::size_t>(i));
}

std::size_t ratio_to_count(std::size_t n, std::size_t ratio) {
  if (ratio < 1 || n < ratio)
    throw Error(Errc::InvalidRatio, "ratio " + std::to_string(ratio) +
                                        " invalid for " + std::to_string(n) +
                                        " points");
  return n / ratio;
}

void validate_neighbor_table(const NeighborTable& table,
                             std::size_t source_size) {
  std::unordered_set<NeighborTable::Index> seen;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    seen.clear();
    bool padding = false;
    for (auto idx : table.row(i)) {
      if (idx == NeighborTable::kSentinel) {
        padding = true;
        continue;
      }
      if (padding || idx < 0 || static_cast<std::size_t>(idx) >= source_size ||
          !seen.insert(idx).second)
        throw Error(Errc::IndexOutOfRange, "neighbor table row violates invariants", i);
    }
  }
}

HardSamplingMatrix::HardSamplingMatrix(std::size_t input_size,
                                       std::vector<std::size_t> selected)
    : n_(input_size), selected_(std::move(selected)) {
  for (std::size_t j = 0; j < selected_.size(); ++j)
    if (selected_[j] >= n_)
      throw Error(Errc::IndexOutOfRange, "hard column selects a missing row", j);
}

}  // namespace cloudsample
