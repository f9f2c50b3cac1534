#include "cloudsample/gradcheck.hpp"

#include <array>
#include <functional>
#include <map>
#include <random>

#include "cloudsample/autodiff.hpp"
#include "cloudsample/casnet.hpp"
#include "cloudsample/losses.hpp"
#include "cloudsample/training.hpp"

namespace cloudsample::gradcheck {

namespace {

using ad::Matrix;
using ad::Tensor;

class Inputs {
 public:
  explicit Inputs(std::uint64_t seed) : rng_(seed) {}

  Matrix uniform(Eigen::Index rows, Eigen::Index cols, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = dist(rng_);
    return out;
  }

  /// Entries bounded away from zero so relu and |.| stay off their kinks.
  Matrix away_from_zero(Eigen::Index rows, Eigen::Index cols) {
    Matrix out = uniform(rows, cols, 0.1, 1.0);
    std::bernoulli_distribution flip(0.5);
    for (Eigen::Index i = 0; i < out.size(); ++i)
      if (flip(rng_)) out.data()[i] = -out.data()[i];
    return out;
  }

  Tensor param(Eigen::Index rows, Eigen::Index cols) {
    return Tensor::parameter(uniform(rows, cols));
  }

  /// sum(out * R) for a fixed random R, so every output entry matters.
  Tensor weighted(const Tensor& out) {
    auto it = weights_.find(out.shape());
    if (it == weights_.end())
      it = weights_
               .emplace(out.shape(), Tensor::constant(uniform(out.value().rows(),
                                                              out.value().cols()),
                                                      out.shape()))
               .first;
    return ad::sum(ad::mul(out, it->second));
  }

 private:
  std::mt19937_64 rng_;
  std::map<ad::Shape, Tensor> weights_;
};

CheckRow op_row(const std::string& name, const std::function<Tensor()>& f,
                std::vector<Tensor> params, double eps) {
  return {name, ad::finite_diff_check(f, params, eps), kOpThreshold, true};
}

}  // namespace

std::vector<CheckRow> check_ops(double eps, std::uint64_t seed) {
  Inputs in(seed);
  std::vector<CheckRow> rows;

  {
    Tensor a = in.param(3, 4), b = in.param(4, 2);
    rows.push_back(op_row("matmul", [&] { return in.weighted(ad::matmul(a, b)); }, {a, b}, eps));
  }
  {
    Tensor a = in.param(3, 4), b = in.param(3, 4);
    rows.push_back(op_row("add", [&] { return in.weighted(ad::add(a, b)); }, {a, b}, eps));
    rows.push_back(op_row("sub", [&] { return in.weighted(ad::sub(a, b)); }, {a, b}, eps));
    rows.push_back(op_row("mul", [&] { return in.weighted(ad::mul(a, b)); }, {a, b}, eps));
    rows.push_back(op_row("scale", [&] { return in.weighted(ad::scale(a, -2.5)); }, {a}, eps));
  }
  {
    Tensor x = in.param(5, 3), bias = in.param(1, 3);
    rows.push_back(
        op_row("add_row", [&] { return in.weighted(ad::add_row(x, bias)); }, {x, bias}, eps));
  }
  {
    Tensor a = in.param(4, 2), b = in.param(4, 3);
    rows.push_back(op_row("concat_cols",
                          [&] {
                            const std::array<Tensor, 2> parts{a, b};
                            return in.weighted(ad::concat_cols(parts));
                          },
                          {a, b}, eps));
  }
  {
    Tensor a = in.param(3, 5);
    rows.push_back(op_row("transpose", [&] { return in.weighted(ad::transpose(a)); }, {a}, eps));
    rows.push_back(op_row("reshape", [&] { return in.weighted(ad::reshape(a, {5, 3})); }, {a},
                          eps));
    rows.push_back(op_row("sum", [&] { return ad::scale(ad::sum(a), 1.5); }, {a}, eps));
    rows.push_back(op_row("mean", [&] { return ad::scale(ad::mean(a), 1.5); }, {a}, eps));
  }
  {
    Tensor a = Tensor::parameter(in.away_from_zero(4, 5));
    rows.push_back(op_row("relu", [&] { return in.weighted(ad::relu(a)); }, {a}, eps));
  }
  {
    Tensor a = Tensor::parameter(in.uniform(4 * 3, 5), ad::Shape{4, 3, 5});
    for (std::size_t axis = 0; axis < 3; ++axis)
      rows.push_back(op_row("max_over_axis(" + std::to_string(axis) + ")",
                            [&, axis] { return in.weighted(ad::max_over_axis(a, axis)); }, {a},
                            eps));
  }
  {
    Tensor a = Tensor::parameter(in.uniform(6, 4, -3, 3));
    for (std::size_t axis = 0; axis < 2; ++axis)
      rows.push_back(op_row("softmax(" + std::to_string(axis) + ")",
                            [&, axis] { return in.weighted(ad::softmax(a, axis)); }, {a}, eps));
  }
  {
    Tensor logits = in.param(4, 3);
    const std::array<std::size_t, 4> labels{0, 2, 1, 2};
    rows.push_back(op_row("cross_entropy", [&] { return ad::cross_entropy(logits, labels); },
                          {logits}, eps));
  }
  {
    Tensor input = in.param(9, 3), sampled = in.param(4, 3);
    rows.push_back(op_row("subset_loss", [&] { return loss::subset_loss(input, sampled); },
                          {input, sampled}, eps));
  }
  {
    Tensor soft = Tensor::parameter(in.uniform(6, 4, 0.05, 1.0));
    rows.push_back(op_row("cosine_loss(rows)",
                          [&] { return loss::cosine_loss(soft, CosineAxis::Rows); }, {soft}, eps));
    rows.push_back(op_row("cosine_loss(columns)",
                          [&] { return loss::cosine_loss(soft, CosineAxis::Columns); }, {soft},
                          eps));
  }
  return rows;
}

CasNetConfig end_to_end_config(SamplingMode mode) {
  CasNetConfig config;
  config.k = 2;
  config.c = 8;
  config.oa_layers = 1;
  config.m = 4;
  config.embed_hidden = 8;
  config.score_hidden = 16;
  config.backend = SearchBackend::KnnBruteforce;
  config.mode = mode;
  return config;
}

CheckRow check_end_to_end(SamplingMode mode, double eps, std::uint64_t seed) {
  const CasNetConfig config = end_to_end_config(mode);
  constexpr std::size_t kPoints = 16;
  constexpr std::size_t kClasses = 3;

  Inputs in(seed);
  const Matrix coords = in.uniform(kPoints, 3);
  const PointCloud cloud(PointMatrix(coords.cast<float>()));
  const auto sampler = casnet::CasNetWeights::initialize(
      casnet::ModelShape::from_config(config, *config.m), seed + 1);
  const auto head = train::ToyTaskHead::initialize(kClasses, seed + 2);
  const std::array<std::size_t, 1> label{1};

  std::vector<Tensor> params = sampler.parameters();
  for (auto& p : head.parameters()) params.push_back(p);
  for (auto& p : params) p.mutable_value() = in.uniform(p.value().rows(), p.value().cols());

  auto objective = [&] {
    const auto fwd = casnet::forward(cloud, config, sampler);
    const auto& cache = fwd.cache;
    return loss::total_loss(ad::cross_entropy(head.logits(cache.sampled), label),
                            loss::subset_loss(cache.input, cache.sampled),
                            loss::cosine_loss(cache.soft, config.cosine_axis), config.alpha,
                            config.beta)
        .total;
  };
  const bool soft = mode == SamplingMode::Soft;
  return {soft ? "end_to_end(assn)" : "end_to_end(ahsn)",
          ad::finite_diff_check(objective, params, eps, kEndToEndFloor), kEndToEndThreshold, soft};
}

}  // namespace cloudsample::gradcheck
