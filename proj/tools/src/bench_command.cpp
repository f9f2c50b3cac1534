#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "cloudsample/io.hpp"
#include "commands.hpp"
#include "methods.hpp"

namespace cloudsample::cli {

namespace {

struct Input {
  std::string name;
  PointCloud cloud;
  std::optional<std::size_t> label;
};

std::vector<std::filesystem::path> list_clouds(const std::filesystem::path& dir,
                                               bool any_extension) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(Errc::IoFailure, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (any_extension || ext == ".bin" || ext == ".xyz") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// `file label` per line; `#` starts a comment.
std::map<std::string, std::size_t> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::map<std::string, std::size_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string name;
    long long label = 0;
    if (!(fields >> name)) continue;
    if (!(fields >> label) || label < 0)
      throw Error(Errc::ParseFailure, "expected '<file> <label>' in " + path.string(), line_no);
    labels[name] = static_cast<std::size_t>(label);
  }
  return labels;
}

struct Timing {
  double per_batch = 0;
  double per_sample = 0;
};

/// Per-sample time is the median over every (cloud, repeat); per-batch time
/// is `batch` times the mean per-sample time of a repeat, median over repeats.
Timing summarize(const std::vector<std::vector<double>>& by_repeat, std::size_t batch) {
  std::vector<double> samples;
  std::vector<double> batches;
  for (const auto& times : by_repeat) {
    double total = 0;
    for (double t : times) {
      samples.push_back(t);
      total += t;
    }
    batches.push_back(total * static_cast<double>(batch) / static_cast<double>(times.size()));
  }
  return {median(batches), median(samples)};
}

}  // namespace

int run_bench(const BenchArgs& args, std::ostream& out) {
  if (args.repeats < 1) throw Error(Errc::InvalidConfig, "--repeats must be >= 1");
  if (args.batch < 1) throw Error(Errc::InvalidConfig, "--batch must be >= 1");
  if (args.crop < 1) throw Error(Errc::InvalidConfig, "--crop must be >= 1");
  if (args.methods.empty() || args.ratios.empty())
    throw Error(Errc::InvalidConfig, "--methods and --ratios must not be empty");
  std::vector<Method> methods;
  for (const auto& name : args.methods) methods.push_back(parse_method(name));
  const auto report_format = io::parse_report_format(args.report_format);
  if (args.head.has_value() != args.labels.has_value())
    throw Error(Errc::InvalidConfig, "--head and --labels must be given together");

  const auto files = list_clouds(args.input, args.format.has_value());
  if (files.empty())
    throw Error(Errc::InvalidConfig, "no point clouds found in " + args.input.string());

  std::map<std::string, std::size_t> labels;
  if (args.labels) labels = read_labels(*args.labels);
  std::optional<train::ToyTaskHead> head;
  if (args.head) head = load_head(*args.head);

  // Clouds grouped by size so every report row has one n_in.
  std::map<std::size_t, std::vector<Input>> groups;
  for (const auto& file : files) {
    const auto format =
        args.format ? io::parse_cloud_format(*args.format) : io::guess_cloud_format(file);
    Input input{file.filename().string(),
                sampling::crop_max_points(io::read_cloud(file, format), args.crop, args.seed),
                std::nullopt};
    if (head) {
      const auto it = labels.find(input.name);
      if (it == labels.end())
        throw Error(Errc::InvalidConfig, "no label for " + input.name);
      input.label = it->second;
    }
    groups[input.cloud.size()].push_back(std::move(input));
  }

  CasNetConfig config = args.config.resolve();
  std::optional<casnet::CasNetWeights> trained;
  if (args.weights) {
    trained = load_sampler(*args.weights);
    match_weights(config, *trained, false);
  }

  std::vector<RunRecord> records;
  for (const Method method : methods) {
    for (const std::size_t ratio : args.ratios) {
      for (const auto& [n, inputs] : groups) {
        const std::size_t m = ratio_to_count(n, ratio);
        RunRecord record;
        record.method = std::string(method_name(method));
        record.n_in = n;
        record.n_out = m;

        std::optional<casnet::InferenceSampler> learned;
        if (method == Method::CasNet) {
          CasNetConfig run_config = config;
          if (trained) {
            if (*run_config.m != m)
              throw Error(Errc::InvalidConfig,
                          "weights produce " + std::to_string(*run_config.m) +
                              " points, ratio " + std::to_string(ratio) + " needs " +
                              std::to_string(m));
            run_config.validate(n);
            learned.emplace(*trained, run_config);
          } else {
            run_config.m = m;
            run_config.validate(n);
            learned.emplace(casnet::CasNetWeights::initialize(
                                casnet::ModelShape::from_config(run_config, m), run_config.seed),
                            run_config);
          }
          record.oa_layers = run_config.oa_layers;
          record.k = run_config.k;
        }

        const ClassicalOptions options{args.seed, args.chunks, 0};
        std::vector<std::vector<double>> times(args.repeats);
        std::vector<std::size_t> truth, predicted;
        for (std::size_t r = 0; r < args.repeats; ++r) {
          for (const auto& input : inputs) {
            PointCloud sampled;
            const auto start = Clock::now();
            if (learned)
              sampled = learned->run(input.cloud).cloud;
            else
              sampled = run_classical(method, input.cloud, m, options).cloud;
            times[r].push_back(seconds_since(start));
            if (head && r == 0) {
              truth.push_back(*input.label);
              predicted.push_back(head->predict(sampled));
            }
          }
        }
        const Timing timing = summarize(times, args.batch);
        record.time_per_batch_s = timing.per_batch;
        record.time_per_sample_s = timing.per_sample;
        if (head) record.metrics = train::classification_metrics(truth, predicted, head->classes());
        records.push_back(std::move(record));
      }
    }
  }

  if (args.report)
    io::write_report(records, report_format, *args.report);
  else
    out << io::format_report(records, report_format);
  return 0;
}

}  // namespace cloudsample::cli
