#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cloudsample/casnet.hpp"
#include "cloudsample/samplers.hpp"
#include "cloudsample/training.hpp"

namespace cloudsample::cli {

enum class Method { Random, Fps, FpsChunked, CasNet };

Method parse_method(std::string_view text);
std::string_view method_name(Method method);

struct ClassicalOptions {
  std::uint64_t seed = 0;
  std::size_t chunks = 8;
  std::size_t start = 0;
};

/// Runs rs, fps or fps-chunked. Throws InvalidConfig for the learned sampler.
sampling::SampleResult run_classical(Method method, const PointCloud& cloud, std::size_t m,
                                     const ClassicalOptions& options);

casnet::CasNetWeights load_sampler(const std::filesystem::path& path);
train::ToyTaskHead load_head(const std::filesystem::path& path);

/// Copies the attention layer count from the weights into `config`, failing
/// if the config asked for a different one.
void match_weights(CasNetConfig& config, const casnet::CasNetWeights& weights,
                   bool oa_requested);

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> values);

}  // namespace cloudsample::cli
