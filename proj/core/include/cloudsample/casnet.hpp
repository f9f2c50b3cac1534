#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cloudsample/autodiff.hpp"
#include "cloudsample/config.hpp"
#include "cloudsample/param_store.hpp"
#include "cloudsample/types.hpp"

/// Attention-based learned sampler: neighborhood embedding, stacked offset
/// attention, and an n x m sampling matrix applied either soft (convex
/// combinations) or hard (one input row per output slot).
namespace cloudsample::casnet {

/// y = x W + b.
struct Dense {
  ad::Tensor weight;  // in x out
  ad::Tensor bias;    // 1 x out

  ad::Tensor apply(const ad::Tensor& x) const;
  std::size_t in() const { return weight.dim(0); }
  std::size_t out() const { return weight.dim(1); }
};

/// Shared per-row affine layers with relu between them (none after the last).
struct Mlp {
  std::vector<Dense> layers;

  ad::Tensor apply(const ad::Tensor& x) const;
  std::size_t in() const { return layers.front().in(); }
  std::size_t out() const { return layers.back().out(); }
};

struct AttentionLayerWeights {
  ad::Tensor query;  // c x c
  ad::Tensor key;    // c x c
  ad::Tensor value;  // c x c
  Dense gamma;       // c -> c, relu applied
};

enum class AttentionKind { Offset, Plain };

struct ModelShape {
  std::size_t c = 64;
  std::size_t oa_layers = 3;
  std::size_t m = 0;
  std::size_t embed_hidden = 64;
  std::size_t score_hidden = 256;

  static ModelShape from_config(const CasNetConfig& config, std::size_t m);
  bool operator==(const ModelShape&) const = default;
};

class CasNetWeights {
 public:
  Mlp embed;                                    // 6 -> hidden -> c
  std::vector<AttentionLayerWeights> attention;  // one per layer
  Mlp score;                                    // layers*c -> hidden -> m

  /// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
  static CasNetWeights initialize(const ModelShape& shape, std::uint64_t seed);

  ModelShape shape() const;
  std::size_t output_size() const { return score.out(); }

  std::vector<std::pair<std::string, ad::Tensor>> named_parameters() const;
  std::vector<ad::Tensor> parameters() const;
  std::size_t parameter_count() const;

  /// Entries are prefixed with `prefix` (e.g. "sampler.").
  std::vector<ad::StoredTensor> to_stored(const std::string& prefix = "sampler.") const;
  /// Entries without `prefix` are ignored. Throws ShapeMismatch when the
  /// stored tensors do not describe a complete, consistent network.
  static CasNetWeights from_stored(std::span<const ad::StoredTensor> stored,
                                   const std::string& prefix = "sampler.");
};

/// Estimated multiply-adds of one forward pass at n input points.
std::uint64_t forward_flops(const CasNetConfig& config, const ModelShape& shape,
                            std::size_t n);

// --- graph stages (double precision, differentiable) -------------------

/// [n, k, 3]: neighbor minus center; sentinel slots are zero.
ad::Tensor group_features(const PointCloud& cloud, const NeighborTable& neighbors);

/// [n, k, 6]: (p_i, grouped(i, j)) per slot.
ad::Tensor combine(const PointCloud& cloud, const ad::Tensor& grouped);

/// Shared MLP over every slot, max-pooled over k: [n, c].
ad::Tensor embed(const ad::Tensor& combined, const Mlp& sigma);

/// Row-normalized scaled dot-product attention matrix, n x n.
ad::Tensor attention_weights(const ad::Tensor& features, const AttentionLayerWeights& layer);
ad::Tensor self_attention(const ad::Tensor& features, const AttentionLayerWeights& layer);
/// gamma(F - SA(F)) + F.
ad::Tensor offset_attention(const ad::Tensor& features, const AttentionLayerWeights& layer);
/// gamma(SA(F)) + F.
ad::Tensor plain_attention_layer(const ad::Tensor& features,
                                 const AttentionLayerWeights& layer);

/// Chains the attention layers and concatenates their outputs: [n, L*c].
ad::Tensor attention_stack(const ad::Tensor& pointwise,
                           std::span<const AttentionLayerWeights> layers,
                           AttentionKind kind = AttentionKind::Offset,
                           std::vector<ad::Tensor>* per_layer = nullptr);

/// softmax over the input-point axis of rho(F): n x m, columns sum to 1.
ad::Tensor soft_matrix(const ad::Tensor& concat, const Mlp& rho);

/// S^T P for a soft matrix tensor and an n x 3 point tensor.
ad::Tensor sample_soft(const ad::Tensor& soft, const ad::Tensor& points);
PointCloud sample_soft(const SoftSamplingMatrix<double>& soft, const PointCloud& cloud);
/// Row j is the input row chosen by column j.
PointCloud sample_hard(const HardSamplingMatrix& hard, const PointCloud& cloud);

SoftSamplingMatrix<double> to_soft_matrix(const ad::Tensor& soft);

struct ForwardCache {
  NeighborTable neighbors;
  ad::Tensor input;     // n x 3
  ad::Tensor grouped;   // [n, k, 3]
  ad::Tensor combined;  // [n, k, 6]
  ad::Tensor pointwise; // n x c
  std::vector<ad::Tensor> layer_outputs;
  ad::Tensor concat;    // n x L*c
  ad::Tensor soft;      // n x m
  std::optional<HardSamplingMatrix> hard;
  ad::Tensor sampled;   // m x 3, carries gradient in both modes
};

struct ForwardResult {
  PointCloud output;
  ForwardCache cache;
};

struct ForwardOptions {
  AttentionKind attention = AttentionKind::Offset;
};

/// neighbors -> group -> combine -> embed -> attention stack -> soft matrix
/// -> soft sampling, or hardening with a straight-through gradient.
ForwardResult forward(const PointCloud& cloud, const CasNetConfig& config,
                      const CasNetWeights& weights, ForwardOptions options = {});

/// Backpropagates `loss` through a hard-mode forward. The hard selection
/// passes gradients to the soft matrix unchanged. Throws NoCache when
/// `cache` did not come from a hard-mode forward.
void backward_ste(const ad::Tensor& loss, const ForwardCache& cache);

// --- single-precision inference ----------------------------------------

/// Forward-only float32 evaluation of a trained network.
class InferenceSampler {
 public:
  InferenceSampler(const CasNetWeights& weights, const CasNetConfig& config,
                   ForwardOptions options = {});

  struct Output {
    PointCloud cloud;
    std::optional<HardSamplingMatrix> hard;
  };

  std::size_t output_size() const { return m_; }
  Output run(const PointCloud& cloud) const;
  SoftSamplingMatrix<float> soft_matrix(const PointCloud& cloud) const;

 private:
  struct Layer {
    RowMatrix<float> weight;
    Eigen::RowVectorXf bias;
  };
  struct Attention {
    RowMatrix<float> query, key, value;
    Layer gamma;
  };

  RowMatrix<float> mlp(const RowMatrix<float>& x, const std::vector<Layer>& layers) const;

  CasNetConfig config_;
  ForwardOptions options_;
  std::size_t m_;
  std::vector<Layer> embed_;
  std::vector<Attention> attention_;
  std::vector<Layer> score_;
};

}  // namespace cloudsample::casnet
