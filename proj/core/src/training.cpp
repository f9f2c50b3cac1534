#include "cloudsample/training.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace cloudsample::train {

void adam_step(ad::Matrix& param, const ad::Matrix& grad, AdamState& state,
               const AdamOptions& options) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols())
    throw Error(Errc::ShapeMismatch, "adam_step: gradient shape differs from parameter");
  if (state.first.size() == 0) {
    state.first = ad::Matrix::Zero(param.rows(), param.cols());
    state.second = ad::Matrix::Zero(param.rows(), param.cols());
  }
  if (state.first.rows() != param.rows() || state.first.cols() != param.cols())
    throw Error(Errc::ShapeMismatch, "adam_step: state shape differs from parameter");
  ++state.steps;
  state.first = options.beta1 * state.first + (1 - options.beta1) * grad;
  state.second = options.beta2 * state.second + (1 - options.beta2) * grad.cwiseProduct(grad);
  const double t = static_cast<double>(state.steps);
  const double c1 = 1 - std::pow(options.beta1, t);
  const double c2 = 1 - std::pow(options.beta2, t);
  param.array() -= options.lr * (state.first.array() / c1) /
                   ((state.second.array() / c2).sqrt() + options.eps);
}

Adam::Adam(std::vector<ad::Tensor> params, AdamOptions options)
    : params_(std::move(params)), states_(params_.size()), options_(options) {}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i)
    adam_step(params_[i].mutable_value(), params_[i].grad(), states_[i], options_);
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

// --- head --------------------------------------------------------------

namespace {

casnet::Dense head_dense(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Matrix w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return {ad::Tensor::parameter(std::move(w)),
          ad::Tensor::parameter(ad::Matrix::Zero(1, static_cast<Eigen::Index>(out)))};
}

std::size_t argmax_row(const ad::Matrix& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < logits.cols(); ++j)
    if (logits(0, j) > logits(0, best)) best = j;
  return static_cast<std::size_t>(best);
}

}  // namespace

ToyTaskHead ToyTaskHead::initialize(std::size_t classes, std::uint64_t seed) {
  if (classes < 1) throw Error(Errc::InvalidConfig, "head needs at least one class");
  std::mt19937_64 rng(seed);
  ToyTaskHead head;
  head.first_ = head_dense(3, kWidth, rng);
  head.second_ = head_dense(kWidth, kWidth, rng);
  head.classifier_ = head_dense(kWidth, classes, rng);
  return head;
}

ad::Tensor ToyTaskHead::logits(const ad::Tensor& points) const {
  if (points.rank() != 2 || points.dim(1) != 3)
    throw Error(Errc::ShapeMismatch, "head expects m x 3 points");
  ad::Tensor h = ad::relu(first_.apply(points));
  h = ad::relu(second_.apply(h));
  ad::Tensor pooled = ad::reshape(ad::max_over_axis(h, 0), {1, kWidth});
  return classifier_.apply(pooled);
}

std::size_t ToyTaskHead::predict(const PointCloud& cloud) const {
  ad::NoGradGuard no_grad;
  return argmax_row(logits(ad::Tensor::constant(cloud.to_double())).value());
}

std::vector<ad::Tensor> ToyTaskHead::parameters() const {
  return {first_.weight,  first_.bias,      second_.weight,
          second_.bias,   classifier_.weight, classifier_.bias};
}

std::vector<ad::StoredTensor> ToyTaskHead::to_stored(const std::string& prefix) const {
  const std::vector<std::pair<std::string, const casnet::Dense*>> layers = {
      {"point.0", &first_}, {"point.1", &second_}, {"classifier", &classifier_}};
  std::vector<ad::StoredTensor> out;
  for (const auto& [name, d] : layers)
    for (const auto& [suffix, t] : {std::pair{".weight", d->weight}, std::pair{".bias", d->bias}}) {
      ad::StoredTensor s{prefix + name + suffix, t.shape(), {}};
      for (double v : t.data()) s.data.push_back(static_cast<float>(v));
      out.push_back(std::move(s));
    }
  return out;
}

ToyTaskHead ToyTaskHead::from_stored(std::span<const ad::StoredTensor> stored,
                                     const std::string& prefix) {
  auto fetch = [&](const std::string& name) {
    for (const auto& s : stored)
      if (s.name == prefix + name) {
        if (s.shape.size() != 2)
          throw Error(Errc::ShapeMismatch, "head tensor '" + s.name + "' must be a matrix");
        ad::Matrix m(static_cast<Eigen::Index>(s.shape[0]), static_cast<Eigen::Index>(s.shape[1]));
        for (std::size_t i = 0; i < s.data.size(); ++i) m.data()[i] = s.data[i];
        return ad::Tensor::parameter(std::move(m));
      }
    throw Error(Errc::ShapeMismatch, "weights lack '" + prefix + name + "'");
  };
  ToyTaskHead head;
  head.first_ = {fetch("point.0.weight"), fetch("point.0.bias")};
  head.second_ = {fetch("point.1.weight"), fetch("point.1.bias")};
  head.classifier_ = {fetch("classifier.weight"), fetch("classifier.bias")};
  if (head.first_.in() != 3 || head.first_.out() != kWidth || head.second_.in() != kWidth ||
      head.second_.out() != kWidth || head.classifier_.in() != kWidth)
    throw Error(Errc::ShapeMismatch, "head tensors have unexpected widths");
  return head;
}

// --- data --------------------------------------------------------------

DatasetOptions DatasetOptions::with_split(std::size_t per_class, double train_fraction) {
  DatasetOptions options;
  options.train_per_class =
      static_cast<std::size_t>(std::ceil(static_cast<double>(per_class) * train_fraction));
  options.test_per_class = per_class - options.train_per_class;
  return options;
}

PointCloud generate_shape(ShapeClass shape, std::size_t points, double jitter,
                          double plane_noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uniform_int_distribution<int> face(0, 5);
  PointMatrix out(static_cast<Eigen::Index>(points), 3);
  for (std::size_t i = 0; i < points; ++i) {
    Eigen::Vector3d p;
    switch (shape) {
      case ShapeClass::Sphere: {
        Eigen::Vector3d d(gauss(rng), gauss(rng), gauss(rng));
        while (d.norm() < 1e-9) d = {gauss(rng), gauss(rng), gauss(rng)};
        p = d.normalized() * (1.0 + jitter * gauss(rng));
        break;
      }
      case ShapeClass::Cube: {
        const int f = face(rng);
        p = {uniform(rng), uniform(rng), uniform(rng)};
        p(f / 2) = (f % 2 == 0) ? 1.0 : -1.0;
        p += jitter * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
        break;
      }
      case ShapeClass::NoisyPlane: {
        p = {uniform(rng), uniform(rng), plane_noise * gauss(rng)};
        p.head<2>() += jitter * Eigen::Vector2d(gauss(rng), gauss(rng));
        break;
      }
    }
    out.row(static_cast<Eigen::Index>(i)) = p.cast<float>().transpose();
  }
  return PointCloud(std::move(out));
}

SyntheticDataset generate_dataset(const DatasetOptions& options) {
  if (options.points_per_cloud < 1 || options.train_per_class + options.test_per_class < 1)
    throw Error(Errc::InvalidConfig, "dataset counts must be >= 1");
  SyntheticDataset data;
  std::mt19937_64 seeds(options.seed);
  for (std::size_t cls = 0; cls < kShapeClasses; ++cls) {
    const std::size_t total = options.train_per_class + options.test_per_class;
    for (std::size_t i = 0; i < total; ++i) {
      LabeledCloud sample{generate_shape(static_cast<ShapeClass>(cls), options.points_per_cloud,
                                         options.jitter, options.plane_noise, seeds()),
                          cls};
      (i < options.train_per_class ? data.train : data.test).push_back(std::move(sample));
    }
  }
  return data;
}

// --- metrics -----------------------------------------------------------

ClassificationMetrics metrics_from_confusion(
    const std::vector<std::vector<std::size_t>>& confusion) {
  const std::size_t classes = confusion.size();
  std::size_t total = 0, correct = 0;
  std::vector<std::size_t> predicted(classes, 0), support(classes, 0);
  for (std::size_t t = 0; t < classes; ++t) {
    if (confusion[t].size() != classes)
      throw Error(Errc::ShapeMismatch, "confusion matrix must be square");
    for (std::size_t p = 0; p < classes; ++p) {
      total += confusion[t][p];
      support[t] += confusion[t][p];
      predicted[p] += confusion[t][p];
    }
    correct += confusion[t][t];
  }
  if (total == 0) throw Error(Errc::EmptySplit, "no samples to score");

  ClassificationMetrics out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (support[c] == 0) continue;
    ++present;
    const double tp = static_cast<double>(confusion[c][c]);
    const double precision = predicted[c] ? tp / static_cast<double>(predicted[c]) : 0.0;
    const double recall = tp / static_cast<double>(support[c]);
    const double f1 =
        precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    out.precision += precision;
    out.recall += recall;
    out.f1 += f1;
  }
  out.precision /= static_cast<double>(present);
  out.recall /= static_cast<double>(present);
  out.f1 /= static_cast<double>(present);
  return out;
}

ClassificationMetrics classification_metrics(std::span<const std::size_t> truth,
                                             std::span<const std::size_t> predicted,
                                             std::size_t classes) {
  if (truth.size() != predicted.size())
    throw Error(Errc::ShapeMismatch, "truth and prediction counts differ");
  std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes)
      throw Error(Errc::BadLabel, "label out of range", i);
    ++confusion[truth[i]][predicted[i]];
  }
  return metrics_from_confusion(confusion);
}

// --- training ----------------------------------------------------------

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,total,task,subset,cosine,train_acc,test_acc,seconds\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << e.loss.total << ',' << e.loss.task << ',' << e.loss.subset << ','
        << e.loss.cosine << ',' << e.train_accuracy << ',' << e.test_accuracy << ','
        << e.seconds << '\n';
  return out.str();
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << to_csv();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

bool is_exact_subset(const PointCloud& sampled, const PointCloud& input) {
  std::set<std::array<std::uint32_t, 3>> rows;
  const auto& p = input.points();
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    rows.insert({std::bit_cast<std::uint32_t>(p(i, 0)), std::bit_cast<std::uint32_t>(p(i, 1)),
                 std::bit_cast<std::uint32_t>(p(i, 2))});
  const auto& s = sampled.points();
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    if (!rows.contains({std::bit_cast<std::uint32_t>(s(i, 0)),
                        std::bit_cast<std::uint32_t>(s(i, 1)),
                        std::bit_cast<std::uint32_t>(s(i, 2))}))
      return false;
  return true;
}

double duplicate_fraction(const HardSamplingMatrix& hard) {
  if (hard.output_size() == 0) return 0;
  std::set<std::size_t> distinct(hard.selected().begin(), hard.selected().end());
  return static_cast<double>(hard.output_size() - distinct.size()) /
         static_cast<double>(hard.output_size());
}

ClassificationMetrics evaluate(const casnet::CasNetWeights& sampler, const ToyTaskHead& head,
                               const CasNetConfig& config,
                               std::span<const LabeledCloud> split) {
  if (split.empty()) throw Error(Errc::EmptySplit, "nothing to evaluate");
  ad::NoGradGuard no_grad;
  std::vector<std::size_t> truth, predicted;
  for (const auto& sample : split) {
    auto result = casnet::forward(sample.cloud, config, sampler);
    truth.push_back(sample.label);
    predicted.push_back(argmax_row(head.logits(result.cache.sampled).value()));
  }
  return classification_metrics(truth, predicted, head.classes());
}

TrainResult train(const CasNetConfig& config, const SyntheticDataset& dataset,
                  const TrainOptions& options) {
  if (dataset.train.empty()) throw Error(Errc::EmptySplit, "empty training split");
  if (options.batch_size < 1) throw Error(Errc::InvalidConfig, "batch size must be >= 1");
  const std::size_t n = dataset.train.front().cloud.size();
  const std::size_t m = config.output_count(n);
  config.validate(n);

  TrainResult result{
      casnet::CasNetWeights::initialize(casnet::ModelShape::from_config(config, m), config.seed),
      ToyTaskHead::initialize(dataset.classes, config.seed + 1), {}};

  std::vector<ad::Tensor> params = result.sampler.parameters();
  for (auto& p : result.head.parameters()) params.push_back(p);
  Adam adam(params, AdamOptions{.lr = options.lr});

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const bool hard = config.mode == SamplingMode::Hard;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochRecord record;
    record.epoch = epoch;
    record.loss.alpha = config.alpha;
    record.loss.beta = config.beta;
    std::size_t correct = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      for (std::size_t b = begin; b < end; ++b) {
        const LabeledCloud& sample = dataset.train[order[b]];
        auto fwd = casnet::forward(sample.cloud, config, result.sampler);
        const auto& cache = fwd.cache;
        ad::Tensor logits = result.head.logits(cache.sampled);
        const std::size_t label[] = {sample.label};
        auto terms = loss::total_loss(ad::cross_entropy(logits, label),
                                      loss::subset_loss(cache.input, cache.sampled),
                                      loss::cosine_loss(cache.soft, config.cosine_axis),
                                      config.alpha, config.beta);
        ad::Tensor root = ad::scale(terms.total, weight);
        if (hard)
          casnet::backward_ste(root, cache);
        else
          ad::backward(root);
        record.loss.total += terms.breakdown.total;
        record.loss.task += terms.breakdown.task;
        record.loss.subset += terms.breakdown.subset;
        record.loss.cosine += terms.breakdown.cosine;
        if (argmax_row(logits.value()) == sample.label) ++correct;
      }
      adam.step();
    }

    const double count = static_cast<double>(order.size());
    record.loss.total /= count;
    record.loss.task /= count;
    record.loss.subset /= count;
    record.loss.cosine /= count;
    record.train_accuracy = static_cast<double>(correct) / count;
    if (!dataset.test.empty())
      record.test_accuracy = evaluate(result.sampler, result.head, config, dataset.test).accuracy;
    if (hard && options.subset_check_every > 0 && epoch % options.subset_check_every == 0) {
      ad::NoGradGuard no_grad;
      bool ok = true;
      const auto& probe = dataset.test.empty() ? dataset.train : dataset.test;
      for (std::size_t i = 0; i < std::min<std::size_t>(probe.size(), 8); ++i)
        ok = ok && is_exact_subset(casnet::forward(probe[i].cloud, config, result.sampler).output,
                                   probe[i].cloud);
      record.subset_check = ok;
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(record);
    if (options.on_epoch) options.on_epoch(record);
    if (options.stop_at_test_accuracy && record.test_accuracy >= *options.stop_at_test_accuracy)
      break;
  }
  return result;
}

}  // namespace cloudsample::train
