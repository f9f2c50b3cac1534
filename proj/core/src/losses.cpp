#include "cloudsample/losses.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cloudsample::loss {

namespace {

struct Nearest {
  std::vector<Eigen::Index> index;
  double mean = 0;
};

// For every row of `from`, the nearest row of `to` (lowest index on ties).
Nearest nearest_rows(const ad::Matrix& from, const ad::Matrix& to) {
  Nearest out;
  out.index.resize(static_cast<std::size_t>(from.rows()));
  double total = 0;
  for (Eigen::Index i = 0; i < from.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = 0;
    for (Eigen::Index j = 0; j < to.rows(); ++j) {
      const double d = (from.row(i) - to.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    out.index[static_cast<std::size_t>(i)] = best_j;
    total += best;
  }
  out.mean = total / static_cast<double>(from.rows());
  return out;
}

}  // namespace

ad::Tensor subset_loss(const ad::Tensor& input, const ad::Tensor& sampled) {
  if (input.rank() != 2 || sampled.rank() != 2 || input.dim(1) != 3 || sampled.dim(1) != 3)
    throw Error(Errc::ShapeMismatch, "subset_loss expects n x 3 and m x 3 point tensors");
  if (input.dim(0) == 0 || sampled.dim(0) == 0)
    throw Error(Errc::EmptyCloud, "subset_loss of an empty cloud");
  Nearest forward = nearest_rows(input.value(), sampled.value());
  Nearest backward = nearest_rows(sampled.value(), input.value());
  ad::Matrix out(1, 1);
  out(0, 0) = forward.mean + backward.mean;
  return ad::make_result(
      std::move(out), {}, {input, sampled},
      [fwd = std::move(forward.index), bwd = std::move(backward.index)](ad::Node& self) {
        ad::Node& x = *self.inputs[0];
        ad::Node& y = *self.inputs[1];
        const double g = self.grad(0, 0);
        const double cx = 2.0 * g / static_cast<double>(x.value.rows());
        const double cy = 2.0 * g / static_cast<double>(y.value.rows());
        ad::Matrix gx = ad::Matrix::Zero(x.value.rows(), 3);
        ad::Matrix gy = ad::Matrix::Zero(y.value.rows(), 3);
        for (Eigen::Index i = 0; i < x.value.rows(); ++i) {
          const Eigen::Index j = fwd[static_cast<std::size_t>(i)];
          const Eigen::RowVector3d diff = x.value.row(i) - y.value.row(j);
          gx.row(i) += cx * diff;
          gy.row(j) -= cx * diff;
        }
        for (Eigen::Index j = 0; j < y.value.rows(); ++j) {
          const Eigen::Index i = bwd[static_cast<std::size_t>(j)];
          const Eigen::RowVector3d diff = y.value.row(j) - x.value.row(i);
          gy.row(j) += cy * diff;
          gx.row(i) -= cy * diff;
        }
        x.accumulate(gx);
        y.accumulate(gy);
      },
      "subset_loss");
}

double subset_loss(const PointCloud& input, const PointCloud& sampled) {
  ad::NoGradGuard no_grad;
  return subset_loss(ad::Tensor::constant(input.to_double()),
                     ad::Tensor::constant(sampled.to_double()))
      .item();
}

ad::Tensor cosine_loss(const ad::Tensor& soft, CosineAxis axis) {
  if (soft.rank() != 2) throw Error(Errc::ShapeMismatch, "cosine_loss expects a matrix");
  const bool by_rows = axis == CosineAxis::Rows;
  const ad::Matrix vectors = by_rows ? soft.value() : ad::Matrix(soft.value().transpose());
  const Eigen::Index count = vectors.rows();
  if (count < 2)
    throw Error(Errc::DegenerateAxis, "cosine_loss needs at least two vectors, got " +
                                          std::to_string(count));

  const Eigen::VectorXd norms = vectors.rowwise().norm();
  const ad::Matrix gram = vectors * vectors.transpose();
  ad::Matrix cosine = ad::Matrix::Zero(count, count);
  double total = 0;
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < count; ++j) {
      if (i == j || norms(i) == 0 || norms(j) == 0) continue;
      cosine(i, j) = gram(i, j) / (norms(i) * norms(j));
      total += std::abs(cosine(i, j));
    }

  ad::Matrix out(1, 1);
  out(0, 0) = total;
  return ad::make_result(
      std::move(out), {}, {soft},
      [vectors, norms, cosine, by_rows](ad::Node& self) {
        const Eigen::Index count = vectors.rows();
        ad::Matrix weight = ad::Matrix::Zero(count, count);
        Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(count);
        for (Eigen::Index i = 0; i < count; ++i)
          for (Eigen::Index j = 0; j < count; ++j) {
            const double c = cosine(i, j);
            if (c == 0) continue;
            const double sign = c > 0 ? 1.0 : -1.0;
            weight(i, j) = 2.0 * sign / (norms(i) * norms(j));
            diagonal(i) += 2.0 * std::abs(c) / (norms(i) * norms(i));
          }
        ad::Matrix g = weight * vectors - diagonal.asDiagonal() * vectors;
        g *= self.grad(0, 0);
        if (by_rows)
          self.inputs[0]->accumulate(g);
        else
          self.inputs[0]->accumulate(g.transpose());
      },
      "cosine_loss");
}

LossTerms total_loss(const ad::Tensor& task, const ad::Tensor& subset,
                     const ad::Tensor& cosine, double alpha, double beta) {
  if (alpha < 0 || beta < 0) throw Error(Errc::InvalidConfig, "loss weights must be >= 0");
  ad::Tensor total =
      ad::add(task, ad::add(ad::scale(subset, alpha), ad::scale(cosine, beta)));
  LossTerms out{total, {}};
  out.breakdown = LossBreakdown{.total = total.item(),
                                .task = task.item(),
                                .subset = subset.item(),
                                .cosine = cosine.item(),
                                .alpha = alpha,
                                .beta = beta};
  return out;
}

LossBreakdown total_loss(double task, double subset, double cosine, double alpha,
                         double beta) {
  if (alpha < 0 || beta < 0) throw Error(Errc::InvalidConfig, "loss weights must be >= 0");
  return LossBreakdown{.total = task + alpha * subset + beta * cosine,
                       .task = task,
                       .subset = subset,
                       .cosine = cosine,
                       .alpha = alpha,
                       .beta = beta};
}

}  // namespace cloudsample::loss
