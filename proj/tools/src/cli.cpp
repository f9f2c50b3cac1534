#include "cloudsample_cli/cli.hpp"

#include <algorithm>
#include <filesystem>

#include <CLI11.hpp>

#include "cloudsample/error.hpp"
#include "commands.hpp"

namespace cloudsample::cli {

CasNetConfig ConfigSources::resolve() const {
  CasNetConfig config = file ? CasNetConfig::load(*file) : CasNetConfig{};
  for (const auto& [key, value] : overrides) config.set(key, value);
  return config;
}

namespace {

std::string canonical_key(std::string key) {
  if (key == "oa") return "oa_layers";
  if (key == "D") return "ratio";
  return key;
}

/// A flag whose value is recorded as a config override under `key`.
void add_override(CLI::App* app, ConfigSources& sources, const std::string& flag,
                  const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&sources, key](const std::string& v) { sources.overrides.emplace_back(key, v); },
      help);
}

void add_config_flags(CLI::App* app, ConfigSources& sources, bool with_mode) {
  app->add_option("--config", sources.file, "key=value config file")->check(CLI::ExistingFile);
  add_override(app, sources, "--k", "k", "neighbors per point");
  add_override(app, sources, "--oa", "oa_layers", "attention layers");
  add_override(app, sources, "--radius", "radius", "ball query radius");
  add_override(app, sources, "--backend", "backend", "ball_query|knn_bruteforce|kdtree");
  add_override(app, sources, "--c", "c", "feature width");
  if (with_mode) add_override(app, sources, "--mode", "mode", "assn|ahsn");
  app->add_option_function<std::vector<std::string>>(
         "--set",
         [&sources](const std::vector<std::string>& items) {
           for (const auto& item : items) {
             const auto eq = item.find('=');
             if (eq == std::string::npos)
               throw CLI::ValidationError("--set", "expected key=value, got '" + item + "'");
             sources.overrides.emplace_back(canonical_key(item.substr(0, eq)),
                                            item.substr(eq + 1));
           }
         },
         "extra config settings, key=value")
      ->take_all();
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::IoFailure:
    case Errc::MalformedLength:
    case Errc::ParseFailure:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point cloud downsampling: learned and classical samplers, benchmarks, training."};
  app.name("cloudsample");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Downsample one point cloud file");
  sample_cmd->add_option("--input", sample.input, "input cloud")->required();
  sample_cmd->add_option("--format", sample.format, "input format: bin|xyz (default: by extension)")
      ->check(CLI::IsMember({"bin", "kitti", "xyz"}));
  sample_cmd->add_option("--method", sample.method, "rs|fps|fps-chunked|casnet")
      ->check(CLI::IsMember({"rs", "fps", "fps-chunked", "casnet"}))
      ->capture_default_str();
  auto* ratio = sample_cmd->add_option("--ratio", sample.ratio, "downsampling ratio D, m = n / D");
  sample_cmd->add_option("--count", sample.count, "output point count m")->excludes(ratio);
  sample_cmd->add_option("--seed", sample.seed, "random sampling seed")->capture_default_str();
  sample_cmd->add_option("--weights", sample.weights, "trained sampler weights")
      ->check(CLI::ExistingFile);
  sample_cmd->add_option("--chunks", sample.chunks, "chunk count M for fps-chunked")
      ->capture_default_str();
  sample_cmd->add_option("--start", sample.start, "fps start index")->capture_default_str();
  sample_cmd->add_option("--output", sample.output, "output cloud");
  sample_cmd->add_option("--output-format", sample.output_format, "bin|xyz (default: by extension)")
      ->check(CLI::IsMember({"bin", "kitti", "xyz"}));
  add_config_flags(sample_cmd, sample.config, true);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time samplers over a directory of clouds");
  bench_cmd->add_option("--input", bench.input, "directory of .bin/.xyz clouds")->required();
  bench_cmd->add_option("--format", bench.format, "read every file in this format: bin|xyz")
      ->check(CLI::IsMember({"bin", "kitti", "xyz"}));
  bench_cmd->add_option("--methods", bench.methods, "comma-separated methods")
      ->delimiter(',')
      ->check(CLI::IsMember({"rs", "fps", "fps-chunked", "casnet"}))
      ->capture_default_str();
  bench_cmd->add_option("--ratios", bench.ratios, "comma-separated ratios")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "timed repeats per cloud")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "seed for random sampling and cropping")
      ->capture_default_str();
  bench_cmd->add_option("--report", bench.report, "report path (default: stdout)");
  bench_cmd->add_option("--report-format,--format-report", bench.report_format, "csv|markdown")
      ->check(CLI::IsMember({"csv", "markdown", "md"}))
      ->capture_default_str();
  bench_cmd->add_option("--weights", bench.weights, "trained sampler weights")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--head", bench.head, "checkpoint with a classifier head")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--labels", bench.labels, "'<file> <label>' per line")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--batch", bench.batch, "clouds per batch")->capture_default_str();
  bench_cmd->add_option("--chunks", bench.chunks, "chunk count M for fps-chunked")
      ->capture_default_str();
  bench_cmd->add_option("--crop", bench.crop, "crop clouds to at most this many points")
      ->capture_default_str();
  add_config_flags(bench_cmd, bench.config, true);

  NnBenchArgs nnbench;
  auto* nnbench_cmd =
      app.add_subcommand("nnbench", "Time neighbor search backends and check them against brute force");
  nnbench_cmd->add_option("--n", nnbench.sizes, "comma-separated cloud sizes")
      ->delimiter(',')
      ->capture_default_str();
  nnbench_cmd->add_option("--k", nnbench.ks, "comma-separated neighbor counts")
      ->delimiter(',')
      ->capture_default_str();
  nnbench_cmd->add_option("--radius", nnbench.radius, "ball query radius")->capture_default_str();
  nnbench_cmd->add_option("--backends", nnbench.backends, "comma-separated backends")
      ->delimiter(',')
      ->check(CLI::IsMember({"ball_query", "ball", "knn_bruteforce", "knn", "kdtree"}))
      ->capture_default_str();
  nnbench_cmd->add_option("--seed", nnbench.seed, "cloud seed")->capture_default_str();
  nnbench_cmd->add_option("--repeats", nnbench.repeats, "timed repeats")->capture_default_str();

  TrainArgs training;
  auto* train_cmd = app.add_subcommand("train", "Train the sampler and a toy classifier on synthetic shapes");
  add_config_flags(train_cmd, training.config, true);
  add_override(train_cmd, training.config, "--seed", "seed", "initialization and shuffle seed");
  add_override(train_cmd, training.config, "--ratio", "ratio", "downsampling ratio D");
  add_override(train_cmd, training.config, "--count", "m", "output point count m");
  add_override(train_cmd, training.config, "--alpha", "alpha", "subset loss weight");
  add_override(train_cmd, training.config, "--beta", "beta", "cosine loss weight");
  add_override(train_cmd, training.config, "--cosine-axis", "cosine_axis", "rows|columns");
  train_cmd->add_option("--epochs", training.epochs, "epochs")->capture_default_str();
  train_cmd->add_option("--lr", training.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--batch", training.batch, "clouds per optimizer step")
      ->capture_default_str();
  train_cmd->add_option("--out", training.out, "checkpoint path")->required();
  train_cmd->add_option("--history", training.history,
                        "history CSV (default: checkpoint path with .history.csv)");
  train_cmd->add_option("--points", training.points, "points per synthetic cloud")
      ->capture_default_str();
  train_cmd->add_option("--train-per-class", training.train_per_class, "training clouds per class")
      ->capture_default_str();
  train_cmd->add_option("--test-per-class", training.test_per_class, "test clouds per class")
      ->capture_default_str();
  train_cmd->add_option("--data-seed", training.data_seed, "dataset seed (default: --seed)");
  train_cmd->add_flag("--quiet", training.quiet, "no per-epoch lines");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad_cmd->add_flag("--ops", grad.ops, "check every differentiable op");
  grad_cmd->add_flag("--end-to-end", grad.end_to_end, "check the full sampler objective");
  grad_cmd->add_option("--eps", grad.eps, "central difference step")->capture_default_str();
  grad_cmd->add_option("--seed", grad.seed, "input seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*sample_cmd) return run_sample(sample, out);
    if (*bench_cmd) return run_bench(bench, out);
    if (*nnbench_cmd) return run_nnbench(nnbench, out);
    if (*train_cmd) return run_train(training, out);
    if (*grad_cmd) return run_gradcheck(grad, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace cloudsample::cli
