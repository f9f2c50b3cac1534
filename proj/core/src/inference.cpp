#include <cmath>

#include "cloudsample/casnet.hpp"
#include "cloudsample/nnsearch.hpp"

namespace cloudsample::casnet {

namespace {

RowMatrix<float> to_float(const ad::Tensor& t) { return t.value().cast<float>(); }

}  // namespace

InferenceSampler::InferenceSampler(const CasNetWeights& weights, const CasNetConfig& config,
                                   ForwardOptions options)
    : config_(config), options_(options), m_(weights.output_size()) {
  if (weights.attention.size() != config.oa_layers)
    throw Error(Errc::ShapeMismatch, "weights and config disagree on attention layer count");
  auto convert = [](const Mlp& mlp) {
    std::vector<Layer> out;
    for (const auto& d : mlp.layers)
      out.push_back(Layer{to_float(d.weight), to_float(d.bias).row(0)});
    return out;
  };
  embed_ = convert(weights.embed);
  score_ = convert(weights.score);
  for (const auto& a : weights.attention)
    attention_.push_back(Attention{to_float(a.query), to_float(a.key), to_float(a.value),
                                   Layer{to_float(a.gamma.weight), to_float(a.gamma.bias).row(0)}});
}

RowMatrix<float> InferenceSampler::mlp(const RowMatrix<float>& x,
                                       const std::vector<Layer>& layers) const {
  RowMatrix<float> h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    RowMatrix<float> next(h.rows(), layers[i].weight.cols());
    next.noalias() = h * layers[i].weight;
    next.rowwise() += layers[i].bias;
    if (i + 1 < layers.size()) next = next.cwiseMax(0.0f);
    h = std::move(next);
  }
  return h;
}

SoftSamplingMatrix<float> InferenceSampler::soft_matrix(const PointCloud& cloud) const {
  validate_cloud(cloud);
  const std::size_t n = cloud.size();
  CasNetConfig effective = config_;
  effective.m = m_;
  effective.validate(n);
  const std::size_t k = config_.k;
  const auto N = static_cast<Eigen::Index>(n);

  const NeighborTable table = nn::find_neighbors(cloud, config_.backend, k, config_.radius);
  const auto& p = cloud.points();
  RowMatrix<float> combined(static_cast<Eigen::Index>(n * k), 6);
  for (std::size_t i = 0; i < n; ++i) {
    const auto center = p.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < k; ++j) {
      const auto r = static_cast<Eigen::Index>(i * k + j);
      combined.block<1, 3>(r, 0) = center;
      const auto idx = table.at(i, j);
      if (idx == NeighborTable::kSentinel)
        combined.block<1, 3>(r, 3).setZero();
      else
        combined.block<1, 3>(r, 3) = p.row(idx) - center;
    }
  }

  RowMatrix<float> slots = mlp(combined, embed_);
  const Eigen::Index c = slots.cols();
  RowMatrix<float> features(N, c);
  if (k == 1) {
    features = std::move(slots);
  } else {
    for (Eigen::Index i = 0; i < N; ++i)
      features.row(i) = slots.middleRows(i * static_cast<Eigen::Index>(k),
                                         static_cast<Eigen::Index>(k)).colwise().maxCoeff();
  }

  const float inv_sqrt_dk = 1.0f / std::sqrt(static_cast<float>(c));
  RowMatrix<float> concat(N, c * static_cast<Eigen::Index>(attention_.size()));
  RowMatrix<float> q(N, c), key(N, c), v(N, c), scores(N, N), attended(N, c), gamma(N, c);
  for (std::size_t l = 0; l < attention_.size(); ++l) {
    const Attention& a = attention_[l];
    q.noalias() = features * a.query;
    q *= inv_sqrt_dk;
    key.noalias() = features * a.key;
    v.noalias() = features * a.value;
    scores.noalias() = q * key.transpose();
    for (Eigen::Index i = 0; i < N; ++i) {
      auto row = scores.row(i).array();
      row = (row - row.maxCoeff()).exp();
      row *= 1.0f / row.sum();
    }
    attended.noalias() = scores * v;
    if (options_.attention == AttentionKind::Offset)
      gamma.noalias() = (features - attended) * a.gamma.weight;
    else
      gamma.noalias() = attended * a.gamma.weight;
    gamma.rowwise() += a.gamma.bias;
    features += gamma.cwiseMax(0.0f);
    concat.middleCols(static_cast<Eigen::Index>(l) * c, c) = features;
  }

  // Softmax down each column (over input points).
  SoftSamplingMatrix<float> soft{mlp(concat, score_)};
  auto& s = soft.values;
  const Eigen::RowVectorXf peak = s.colwise().maxCoeff();
  Eigen::RowVectorXf total = Eigen::RowVectorXf::Zero(s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    auto row = s.row(i).array();
    row = (row - peak.array()).exp();
    total.array() += row;
  }
  const Eigen::RowVectorXf inverse = total.cwiseInverse();
  for (Eigen::Index i = 0; i < s.rows(); ++i) s.row(i).array() *= inverse.array();
  return soft;
}

InferenceSampler::Output InferenceSampler::run(const PointCloud& cloud) const {
  SoftSamplingMatrix<float> soft = soft_matrix(cloud);
  Output out;
  if (config_.mode == SamplingMode::Soft) {
    PointMatrix sampled = soft.values.transpose() * cloud.points();
    out.cloud = PointCloud(std::move(sampled));
  } else {
    out.hard = harden(soft);
    out.cloud = sample_hard(*out.hard, cloud);
  }
  return out;
}

}  // namespace cloudsample::casnet
