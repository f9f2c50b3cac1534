#include <cstdio>

#include "cloudsample/io.hpp"
#include "cloudsample/training.hpp"
#include "commands.hpp"
#include "methods.hpp"

namespace cloudsample::cli {

namespace {

io::CloudFormat format_for(const std::filesystem::path& path,
                           const std::optional<std::string>& flag) {
  return flag ? io::parse_cloud_format(*flag) : io::guess_cloud_format(path);
}

bool overrides_key(const ConfigSources& sources, std::string_view key) {
  for (const auto& [k, v] : sources.overrides)
    if (k == key) return true;
  return false;
}

}  // namespace

int run_sample(const SampleArgs& args, std::ostream& out) {
  const Method method = parse_method(args.method);
  const PointCloud cloud = io::read_cloud(args.input, format_for(args.input, args.format));
  const std::size_t n = cloud.size();

  std::optional<std::size_t> requested;
  if (args.count) requested = *args.count;
  if (args.ratio) requested = ratio_to_count(n, *args.ratio);

  PointCloud result;
  double elapsed = 0;
  bool subset_required = false;
  if (method == Method::CasNet) {
    if (!args.weights) throw Error(Errc::InvalidConfig, "casnet requires --weights");
    CasNetConfig config = args.config.resolve();
    const auto weights = load_sampler(*args.weights);
    match_weights(config, weights, overrides_key(args.config, "oa_layers"));
    if (requested && *requested != *config.m)
      throw Error(Errc::InvalidConfig, "weights produce " + std::to_string(*config.m) +
                                           " points, " + std::to_string(*requested) +
                                           " were requested");
    config.validate(n);
    const casnet::InferenceSampler sampler(weights, config);
    const auto start = Clock::now();
    auto sampled = sampler.run(cloud);
    elapsed = seconds_since(start);
    result = std::move(sampled.cloud);
    subset_required = config.mode == SamplingMode::Hard;
  } else {
    const std::size_t m = requested.value_or(ratio_to_count(n, 2));
    const ClassicalOptions options{args.seed, args.chunks, args.start};
    const auto start = Clock::now();
    auto sampled = run_classical(method, cloud, m, options);
    elapsed = seconds_since(start);
    result = std::move(sampled.cloud);
  }

  if (args.output) {
    const auto format = format_for(*args.output, args.output_format);
    io::write_cloud(*args.output, result, format);
    if (subset_required && !train::is_exact_subset(io::read_cloud(*args.output, format), cloud))
      throw Error(Errc::InvalidConfig, "written output is not a subset of the input");
  } else if (subset_required && !train::is_exact_subset(result, cloud)) {
    throw Error(Errc::InvalidConfig, "output is not a subset of the input");
  }

  char line[64];
  std::snprintf(line, sizeof line, "t_sample_s=%.9f\n", elapsed);
  out << "n_in=" << n << "\nn_out=" << result.size() << '\n' << line;
  return 0;
}

}  // namespace cloudsample::cli
