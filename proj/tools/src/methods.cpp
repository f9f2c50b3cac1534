#include "methods.hpp"

#include <algorithm>

#include "cloudsample/param_store.hpp"

namespace cloudsample::cli {

Method parse_method(std::string_view text) {
  if (text == "rs") return Method::Random;
  if (text == "fps") return Method::Fps;
  if (text == "fps-chunked") return Method::FpsChunked;
  if (text == "casnet") return Method::CasNet;
  throw Error(Errc::InvalidConfig, "unknown method '" + std::string(text) + "'");
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Random: return "rs";
    case Method::Fps: return "fps";
    case Method::FpsChunked: return "fps-chunked";
    case Method::CasNet: return "casnet";
  }
  return "?";
}

sampling::SampleResult run_classical(Method method, const PointCloud& cloud, std::size_t m,
                                     const ClassicalOptions& options) {
  switch (method) {
    case Method::Random: return sampling::random_sample(cloud, m, options.seed);
    case Method::Fps: return sampling::fps(cloud, m, options.start);
    case Method::FpsChunked: return sampling::fps_chunked(cloud, m, options.chunks);
    case Method::CasNet: break;
  }
  throw Error(Errc::InvalidConfig, "casnet is not a classical method");
}

casnet::CasNetWeights load_sampler(const std::filesystem::path& path) {
  const auto stored = ad::read_weight_file(path);
  return casnet::CasNetWeights::from_stored(stored);
}

train::ToyTaskHead load_head(const std::filesystem::path& path) {
  const auto stored = ad::read_weight_file(path);
  return train::ToyTaskHead::from_stored(stored);
}

void match_weights(CasNetConfig& config, const casnet::CasNetWeights& weights,
                   bool oa_requested) {
  const auto shape = weights.shape();
  if (oa_requested && config.oa_layers != shape.oa_layers)
    throw Error(Errc::InvalidConfig, "weights have " + std::to_string(shape.oa_layers) +
                                         " attention layers, --oa asked for " +
                                         std::to_string(config.oa_layers));
  config.oa_layers = shape.oa_layers;
  config.c = shape.c;
  config.embed_hidden = shape.embed_hidden;
  config.score_hidden = shape.score_hidden;
  config.m = shape.m;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace cloudsample::cli
