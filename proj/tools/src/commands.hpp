#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cloudsample/config.hpp"
#include "cloudsample/error.hpp"

namespace cloudsample::cli {

/// `key=value` settings applied on top of an optional config file, in order.
struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::vector<std::pair<std::string, std::string>> overrides;

  CasNetConfig resolve() const;
};

struct SampleArgs {
  std::filesystem::path input;
  std::optional<std::string> format;
  std::string method = "rs";
  std::optional<std::size_t> ratio;
  std::optional<std::size_t> count;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> output;
  std::optional<std::string> output_format;
  std::size_t chunks = 8;
  std::size_t start = 0;
  ConfigSources config;
};

struct BenchArgs {
  std::filesystem::path input;
  std::optional<std::string> format;
  std::vector<std::string> methods{"rs", "fps"};
  std::vector<std::size_t> ratios{2};
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> report;
  std::string report_format = "csv";
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> head;
  std::optional<std::filesystem::path> labels;
  std::size_t batch = 12;
  std::size_t chunks = 8;
  std::size_t crop = 8192;
  ConfigSources config;
};

struct NnBenchArgs {
  std::vector<std::size_t> sizes{1024};
  std::vector<std::size_t> ks{1, 8, 32};
  double radius = 2.0;
  std::vector<std::string> backends{"ball_query", "knn_bruteforce", "kdtree"};
  std::uint64_t seed = 0;
  std::size_t repeats = 3;
};

struct TrainArgs {
  ConfigSources config;
  std::size_t epochs = 100;
  double lr = 5e-4;
  std::size_t batch = 12;
  std::filesystem::path out;
  std::optional<std::filesystem::path> history;
  std::size_t points = 256;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 30;
  std::optional<std::uint64_t> data_seed;
  bool quiet = false;
};

struct GradcheckArgs {
  bool ops = false;
  bool end_to_end = false;
  double eps = 1e-6;
  std::uint64_t seed = 0;
};

int run_sample(const SampleArgs& args, std::ostream& out);
int run_bench(const BenchArgs& args, std::ostream& out);
int run_nnbench(const NnBenchArgs& args, std::ostream& out);
int run_train(const TrainArgs& args, std::ostream& out);
int run_gradcheck(const GradcheckArgs& args, std::ostream& out);

}  // namespace cloudsample::cli
