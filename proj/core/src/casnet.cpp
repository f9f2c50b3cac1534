#include "cloudsample/casnet.hpp"

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "cloudsample/nnsearch.hpp"

namespace cloudsample::casnet {

ad::Tensor Dense::apply(const ad::Tensor& x) const {
  return ad::add_row(ad::matmul(x, weight), bias);
}

ad::Tensor Mlp::apply(const ad::Tensor& x) const {
  ad::Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].apply(h);
    if (i + 1 < layers.size()) h = ad::relu(h);
  }
  return h;
}

ModelShape ModelShape::from_config(const CasNetConfig& config, std::size_t m) {
  return ModelShape{.c = config.c,
                    .oa_layers = config.oa_layers,
                    .m = m,
                    .embed_hidden = config.embed_hidden,
                    .score_hidden = config.score_hidden};
}

namespace {

Dense make_dense(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Matrix w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return Dense{ad::Tensor::parameter(std::move(w)),
               ad::Tensor::parameter(ad::Matrix::Zero(1, static_cast<Eigen::Index>(out)))};
}

ad::Tensor make_square(std::size_t c, std::mt19937_64& rng) {
  return make_dense(c, c, rng).weight;
}

}  // namespace

CasNetWeights CasNetWeights::initialize(const ModelShape& shape, std::uint64_t seed) {
  if (shape.c < 1 || shape.oa_layers < 1 || shape.m < 1 || shape.embed_hidden < 1 ||
      shape.score_hidden < 1)
    throw Error(Errc::InvalidConfig, "model widths must be >= 1");
  std::mt19937_64 rng(seed);
  CasNetWeights w;
  w.embed.layers.push_back(make_dense(6, shape.embed_hidden, rng));
  w.embed.layers.push_back(make_dense(shape.embed_hidden, shape.c, rng));
  for (std::size_t l = 0; l < shape.oa_layers; ++l) {
    AttentionLayerWeights layer;
    layer.query = make_square(shape.c, rng);
    layer.key = make_square(shape.c, rng);
    layer.value = make_square(shape.c, rng);
    layer.gamma = make_dense(shape.c, shape.c, rng);
    w.attention.push_back(std::move(layer));
  }
  w.score.layers.push_back(make_dense(shape.oa_layers * shape.c, shape.score_hidden, rng));
  w.score.layers.push_back(make_dense(shape.score_hidden, shape.m, rng));
  return w;
}

ModelShape CasNetWeights::shape() const {
  return ModelShape{.c = embed.out(),
                    .oa_layers = attention.size(),
                    .m = score.out(),
                    .embed_hidden = embed.layers.front().out(),
                    .score_hidden = score.layers.front().out()};
}

std::vector<std::pair<std::string, ad::Tensor>> CasNetWeights::named_parameters() const {
  std::vector<std::pair<std::string, ad::Tensor>> out;
  auto add_mlp = [&](const std::string& name, const Mlp& mlp) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
      const std::string base = name + "." + std::to_string(i);
      out.emplace_back(base + ".weight", mlp.layers[i].weight);
      out.emplace_back(base + ".bias", mlp.layers[i].bias);
    }
  };
  add_mlp("embed", embed);
  for (std::size_t l = 0; l < attention.size(); ++l) {
    const std::string base = "attention." + std::to_string(l);
    out.emplace_back(base + ".query", attention[l].query);
    out.emplace_back(base + ".key", attention[l].key);
    out.emplace_back(base + ".value", attention[l].value);
    out.emplace_back(base + ".gamma.weight", attention[l].gamma.weight);
    out.emplace_back(base + ".gamma.bias", attention[l].gamma.bias);
  }
  add_mlp("score", score);
  return out;
}

std::vector<ad::Tensor> CasNetWeights::parameters() const {
  std::vector<ad::Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t CasNetWeights::parameter_count() const {
  std::size_t total = 0;
  for (auto& [name, t] : named_parameters()) total += t.size();
  return total;
}

std::vector<ad::StoredTensor> CasNetWeights::to_stored(const std::string& prefix) const {
  std::vector<ad::StoredTensor> out;
  for (auto& [name, t] : named_parameters()) {
    ad::StoredTensor s{prefix + name, t.shape(), {}};
    s.data.reserve(t.size());
    for (double v : t.data()) s.data.push_back(static_cast<float>(v));
    out.push_back(std::move(s));
  }
  return out;
}

CasNetWeights CasNetWeights::from_stored(std::span<const ad::StoredTensor> stored,
                                         const std::string& prefix) {
  std::map<std::string, const ad::StoredTensor*> by_name;
  for (const auto& s : stored)
    if (s.name.rfind(prefix, 0) == 0) by_name[s.name.substr(prefix.size())] = &s;

  auto fetch = [&](const std::string& name) -> const ad::StoredTensor* {
    auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : it->second;
  };
  auto tensor = [](const ad::StoredTensor& s) {
    if (s.shape.size() != 2)
      throw Error(Errc::ShapeMismatch, "weight '" + s.name + "' must be a matrix");
    ad::Matrix m(static_cast<Eigen::Index>(s.shape[0]), static_cast<Eigen::Index>(s.shape[1]));
    for (std::size_t i = 0; i < s.data.size(); ++i) m.data()[i] = s.data[i];
    return ad::Tensor::parameter(std::move(m));
  };
  auto dense = [&](const std::string& base) -> std::optional<Dense> {
    const auto* w = fetch(base + ".weight");
    const auto* b = fetch(base + ".bias");
    if (!w || !b) return std::nullopt;
    Dense d{tensor(*w), tensor(*b)};
    if (d.bias.dim(0) != 1 || d.bias.dim(1) != d.weight.dim(1))
      throw Error(Errc::ShapeMismatch, "bias of '" + base + "' does not match its weight");
    return d;
  };
  auto mlp = [&](const std::string& name) {
    Mlp out;
    for (std::size_t i = 0;; ++i) {
      auto d = dense(name + "." + std::to_string(i));
      if (!d) break;
      if (!out.layers.empty() && out.layers.back().out() != d->in())
        throw Error(Errc::ShapeMismatch, "layer widths of '" + name + "' do not chain");
      out.layers.push_back(std::move(*d));
    }
    if (out.layers.empty())
      throw Error(Errc::ShapeMismatch, "weights lack '" + prefix + name + "'");
    return out;
  };

  CasNetWeights w;
  w.embed = mlp("embed");
  if (w.embed.in() != 6) throw Error(Errc::ShapeMismatch, "embedding input width must be 6");
  const std::size_t c = w.embed.out();
  for (std::size_t l = 0;; ++l) {
    const std::string base = "attention." + std::to_string(l);
    const auto* q = fetch(base + ".query");
    if (!q) break;
    const auto* k = fetch(base + ".key");
    const auto* v = fetch(base + ".value");
    auto gamma = dense(base + ".gamma");
    if (!k || !v || !gamma)
      throw Error(Errc::ShapeMismatch, "incomplete attention layer " + std::to_string(l));
    AttentionLayerWeights layer{tensor(*q), tensor(*k), tensor(*v), std::move(*gamma)};
    for (const auto* t : {&layer.query, &layer.key, &layer.value, &layer.gamma.weight})
      if (t->dim(0) != c || t->dim(1) != c)
        throw Error(Errc::ShapeMismatch, "attention layer " + std::to_string(l) +
                                             " projections must be c x c");
    w.attention.push_back(std::move(layer));
  }
  if (w.attention.empty()) throw Error(Errc::ShapeMismatch, "weights lack attention layers");
  w.score = mlp("score");
  if (w.score.in() != w.attention.size() * c)
    throw Error(Errc::ShapeMismatch, "score input width must equal layers * c");
  return w;
}

std::uint64_t forward_flops(const CasNetConfig& config, const ModelShape& shape,
                            std::size_t n) {
  const std::uint64_t N = n, K = config.k, C = shape.c, H = shape.embed_hidden,
                      S = shape.score_hidden, M = shape.m, L = shape.oa_layers;
  std::uint64_t total = 0;
  // Neighbor search.
  if (config.backend == SearchBackend::KdTree) {
    std::uint64_t depth = 1;
    while ((std::uint64_t{1} << depth) * nn::KdTree::kDefaultBucket < N) ++depth;
    total += N * 3 * (depth + K) * 16;
  } else {
    total += N * N * 3;
  }
  total += N * K * (6 * H + H * C);               // embedding
  total += L * (4 * N * C * C + 2 * N * N * C);   // attention stack
  total += N * (L * C * S + S * M);               // scoring MLP
  total += (config.mode == SamplingMode::Soft ? N : 1) * M * 3;
  return total;
}

ad::Tensor group_features(const PointCloud& cloud, const NeighborTable& neighbors) {
  const std::size_t n = cloud.size();
  const std::size_t k = neighbors.k();
  if (neighbors.rows() != n)
    throw Error(Errc::ShapeMismatch, "neighbor table rows differ from cloud size");
  ad::Matrix out = ad::Matrix::Zero(static_cast<Eigen::Index>(n * k), 3);
  const auto& p = cloud.points();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto idx = neighbors.at(i, j);
      if (idx == NeighborTable::kSentinel) continue;
      if (idx < 0 || static_cast<std::size_t>(idx) >= n)
        throw Error(Errc::IndexOutOfRange, "neighbor index out of range", i);
      const auto r = static_cast<Eigen::Index>(i * k + j);
      for (int d = 0; d < 3; ++d)
        out(r, d) = static_cast<double>(p(idx, d)) - static_cast<double>(p(static_cast<Eigen::Index>(i), d));
    }
  }
  return ad::Tensor::constant(std::move(out), ad::Shape{n, k, 3});
}

ad::Tensor combine(const PointCloud& cloud, const ad::Tensor& grouped) {
  const std::size_t n = cloud.size();
  if (grouped.rank() != 3 || grouped.dim(0) != n || grouped.dim(2) != 3)
    throw Error(Errc::ShapeMismatch, "grouped features must be [n, k, 3]");
  const std::size_t k = grouped.dim(1);
  ad::Matrix out(static_cast<Eigen::Index>(n * k), 6);
  const auto& p = cloud.points();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const auto r = static_cast<Eigen::Index>(i * k + j);
      out.block<1, 3>(r, 0) = p.row(static_cast<Eigen::Index>(i)).cast<double>();
      out.block<1, 3>(r, 3) = grouped.value().row(r);
    }
  return ad::make_result(std::move(out), {n, k, 6}, {grouped},
                         [](ad::Node& self) {
                           self.inputs[0]->accumulate(self.grad.rightCols(3));
                         },
                         "combine");
}

ad::Tensor embed(const ad::Tensor& combined, const Mlp& sigma) {
  if (combined.rank() != 3 || combined.dim(2) != 6 || sigma.in() != 6)
    throw Error(Errc::ShapeMismatch, "embedding expects [n, k, 6] input and a 6-wide MLP");
  const std::size_t n = combined.dim(0);
  const std::size_t k = combined.dim(1);
  ad::Tensor flat = ad::reshape(combined, {n * k, 6});
  ad::Tensor h = sigma.apply(flat);
  if (k == 1) return ad::reshape(h, {n, sigma.out()});
  return ad::max_over_axis(ad::reshape(h, {n, k, sigma.out()}), 1);
}

namespace {

void check_layer(const ad::Tensor& features, const AttentionLayerWeights& layer) {
  if (features.rank() != 2 || layer.query.dim(0) != features.dim(1) ||
      layer.key.dim(1) != layer.query.dim(1) || layer.value.dim(1) != features.dim(1) ||
      layer.gamma.in() != features.dim(1) || layer.gamma.out() != features.dim(1))
    throw Error(Errc::ShapeMismatch, "attention layer widths do not match features");
}

}  // namespace

ad::Tensor attention_weights(const ad::Tensor& features, const AttentionLayerWeights& layer) {
  check_layer(features, layer);
  ad::Tensor q = ad::matmul(features, layer.query);
  ad::Tensor k = ad::matmul(features, layer.key);
  const double d_k = static_cast<double>(layer.key.dim(1));
  return ad::softmax(ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(d_k)), 1);
}

ad::Tensor self_attention(const ad::Tensor& features, const AttentionLayerWeights& layer) {
  return ad::matmul(attention_weights(features, layer), ad::matmul(features, layer.value));
}

ad::Tensor offset_attention(const ad::Tensor& features, const AttentionLayerWeights& layer) {
  ad::Tensor offset = ad::sub(features, self_attention(features, layer));
  return ad::add(ad::relu(layer.gamma.apply(offset)), features);
}

ad::Tensor plain_attention_layer(const ad::Tensor& features,
                                 const AttentionLayerWeights& layer) {
  return ad::add(ad::relu(layer.gamma.apply(self_attention(features, layer))), features);
}

ad::Tensor attention_stack(const ad::Tensor& pointwise,
                           std::span<const AttentionLayerWeights> layers, AttentionKind kind,
                           std::vector<ad::Tensor>* per_layer) {
  if (layers.empty()) throw Error(Errc::InvalidConfig, "attention stack needs >= 1 layer");
  std::vector<ad::Tensor> outputs;
  ad::Tensor f = pointwise;
  for (const auto& layer : layers) {
    f = kind == AttentionKind::Offset ? offset_attention(f, layer)
                                      : plain_attention_layer(f, layer);
    outputs.push_back(f);
  }
  ad::Tensor out = outputs.size() == 1 ? outputs.front() : ad::concat_cols(outputs);
  if (per_layer) *per_layer = std::move(outputs);
  return out;
}

ad::Tensor soft_matrix(const ad::Tensor& concat, const Mlp& rho) {
  if (concat.rank() != 2 || concat.dim(1) != rho.in())
    throw Error(Errc::ShapeMismatch, "scoring MLP input width differs from features");
  return ad::softmax(rho.apply(concat), 0);
}

ad::Tensor sample_soft(const ad::Tensor& soft, const ad::Tensor& points) {
  if (soft.rank() != 2 || points.rank() != 2 || soft.dim(0) != points.dim(0))
    throw Error(Errc::ShapeMismatch, "sampling matrix rows differ from point count");
  return ad::matmul(ad::transpose(soft), points);
}

PointCloud sample_soft(const SoftSamplingMatrix<double>& soft, const PointCloud& cloud) {
  if (soft.input_size() != cloud.size())
    throw Error(Errc::ShapeMismatch, "sampling matrix rows differ from point count");
  RowMatrix<double> out = soft.values.transpose() * cloud.to_double();
  return PointCloud(PointMatrix(out.cast<float>()));
}

PointCloud sample_hard(const HardSamplingMatrix& hard, const PointCloud& cloud) {
  if (hard.input_size() != cloud.size())
    throw Error(Errc::ShapeMismatch, "sampling matrix rows differ from point count");
  return cloud.gather(hard.selected());
}

SoftSamplingMatrix<double> to_soft_matrix(const ad::Tensor& soft) {
  if (soft.rank() != 2) throw Error(Errc::ShapeMismatch, "soft matrix must be n x m");
  return SoftSamplingMatrix<double>{soft.value()};
}

ForwardResult forward(const PointCloud& cloud, const CasNetConfig& config,
                      const CasNetWeights& weights, ForwardOptions options) {
  validate_cloud(cloud);
  const std::size_t n = cloud.size();
  CasNetConfig effective = config;
  effective.m = weights.output_size();
  effective.validate(n);
  if (weights.attention.size() != config.oa_layers)
    throw Error(Errc::ShapeMismatch, "weights have " + std::to_string(weights.attention.size()) +
                                         " attention layers, config asks for " +
                                         std::to_string(config.oa_layers));

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.neighbors = nn::find_neighbors(cloud, config.backend, config.k, config.radius);
  cache.input = ad::Tensor::constant(cloud.to_double());
  cache.grouped = group_features(cloud, cache.neighbors);
  cache.combined = combine(cloud, cache.grouped);
  cache.pointwise = embed(cache.combined, weights.embed);
  cache.concat =
      attention_stack(cache.pointwise, weights.attention, options.attention, &cache.layer_outputs);
  cache.soft = soft_matrix(cache.concat, weights.score);

  if (config.mode == SamplingMode::Soft) {
    cache.sampled = sample_soft(cache.soft, cache.input);
    result.output = PointCloud(PointMatrix(cache.sampled.value().cast<float>()));
  } else {
    cache.hard = harden(to_soft_matrix(cache.soft));
    ad::Tensor selector = ad::straight_through(cache.soft, cache.hard->dense<double>());
    cache.sampled = sample_soft(selector, cache.input);
    result.output = sample_hard(*cache.hard, cloud);
  }
  return result;
}

void backward_ste(const ad::Tensor& loss, const ForwardCache& cache) {
  if (!cache.hard || !cache.soft || !cache.sampled)
    throw Error(Errc::NoCache, "no hard-mode forward pass recorded");
  ad::backward(loss);
}

}  // namespace cloudsample::casnet
