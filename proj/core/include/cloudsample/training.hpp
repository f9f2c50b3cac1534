#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cloudsample/autodiff.hpp"
#include "cloudsample/casnet.hpp"
#include "cloudsample/config.hpp"
#include "cloudsample/losses.hpp"
#include "cloudsample/types.hpp"

namespace cloudsample::train {

// --- optimizer ---------------------------------------------------------

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ad::Matrix first;
  ad::Matrix second;
  std::size_t steps = 0;
};

/// One bias-corrected Adam update of `param` in place. Throws ShapeMismatch.
void adam_step(ad::Matrix& param, const ad::Matrix& grad, AdamState& state,
               const AdamOptions& options);

class Adam {
 public:
  Adam(std::vector<ad::Tensor> params, AdamOptions options);

  /// Applies the accumulated gradients, then clears them.
  void step();
  void zero_grad();
  void set_lr(double lr) { options_.lr = lr; }

 private:
  std::vector<ad::Tensor> params_;
  std::vector<AdamState> states_;
  AdamOptions options_;
};

// --- downstream classifier -------------------------------------------

/// Per-point MLP 3 -> 32 -> 32, global max-pool, linear 32 -> classes.
class ToyTaskHead {
 public:
  static constexpr std::size_t kWidth = 32;

  static ToyTaskHead initialize(std::size_t classes, std::uint64_t seed);

  /// 1 x classes logits for an m x 3 point tensor.
  ad::Tensor logits(const ad::Tensor& points) const;
  std::size_t predict(const PointCloud& cloud) const;

  std::size_t classes() const { return classifier_.out(); }
  std::vector<ad::Tensor> parameters() const;

  std::vector<ad::StoredTensor> to_stored(const std::string& prefix = "head.") const;
  static ToyTaskHead from_stored(std::span<const ad::StoredTensor> stored,
                                 const std::string& prefix = "head.");

 private:
  casnet::Dense first_;
  casnet::Dense second_;
  casnet::Dense classifier_;
};

// --- synthetic data ----------------------------------------------------

enum class ShapeClass : std::size_t { Sphere = 0, Cube = 1, NoisyPlane = 2 };
inline constexpr std::size_t kShapeClasses = 3;

struct LabeledCloud {
  PointCloud cloud;
  std::size_t label = 0;
};

struct DatasetOptions {
  std::size_t points_per_cloud = 256;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 30;
  double jitter = 0.01;
  double plane_noise = 0.05;
  std::uint64_t seed = 0;

  /// Splits `per_class` clouds 70/30 (train gets the rounding).
  static DatasetOptions with_split(std::size_t per_class, double train_fraction = 0.7);
};

struct SyntheticDataset {
  std::vector<LabeledCloud> train;
  std::vector<LabeledCloud> test;
  std::size_t classes = kShapeClasses;
};

/// Unit-scale spheres, cube surfaces and noisy planes with seeded jitter.
SyntheticDataset generate_dataset(const DatasetOptions& options);
PointCloud generate_shape(ShapeClass shape, std::size_t points, double jitter,
                          double plane_noise, std::uint64_t seed);

// --- metrics -----------------------------------------------------------

/// confusion[truth][predicted]. Classes with no true samples are left out of
/// the macro averages. Throws EmptySplit when the matrix counts nothing.
ClassificationMetrics metrics_from_confusion(
    const std::vector<std::vector<std::size_t>>& confusion);
ClassificationMetrics classification_metrics(std::span<const std::size_t> truth,
                                             std::span<const std::size_t> predicted,
                                             std::size_t classes);

// --- training ----------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  loss::LossBreakdown loss;  // mean over training clouds
  double train_accuracy = 0;
  double test_accuracy = 0;
  double seconds = 0;
  std::optional<bool> subset_check;  // hard mode, every few epochs
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// epoch,total,task,subset,cosine,train_acc,test_acc,seconds
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainOptions {
  std::size_t epochs = 100;
  double lr = 5e-4;
  std::size_t batch_size = 12;
  std::size_t subset_check_every = 10;
  /// Stop once test accuracy reaches this value.
  std::optional<double> stop_at_test_accuracy;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  casnet::CasNetWeights sampler;
  ToyTaskHead head;
  TrainHistory history;
};

/// Joint optimization of sampler and head against the composite loss.
/// Deterministic given (config.seed, config, dataset, options) apart from
/// recorded wall times.
TrainResult train(const CasNetConfig& config, const SyntheticDataset& dataset,
                  const TrainOptions& options);

/// Head prediction on the sampler's output. Throws EmptySplit.
ClassificationMetrics evaluate(const casnet::CasNetWeights& sampler, const ToyTaskHead& head,
                               const CasNetConfig& config,
                               std::span<const LabeledCloud> split);

/// True when every row of `sampled` equals some row of `input` bitwise.
bool is_exact_subset(const PointCloud& sampled, const PointCloud& input);

/// Fraction of output slots whose selected index repeats an earlier slot.
double duplicate_fraction(const HardSamplingMatrix& hard);

}  // namespace cloudsample::train
