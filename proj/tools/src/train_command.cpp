#include <cstdio>
#include <fstream>

#include "cloudsample/param_store.hpp"
#include "cloudsample/training.hpp"
#include "commands.hpp"

namespace cloudsample::cli {

namespace {

std::filesystem::path sibling(const std::filesystem::path& path, const char* extension) {
  auto out = path;
  out.replace_extension(extension);
  return out;
}

}  // namespace

int run_train(const TrainArgs& args, std::ostream& out) {
  if (args.epochs < 1) throw Error(Errc::InvalidConfig, "--epochs must be >= 1");
  if (!(args.lr > 0)) throw Error(Errc::InvalidConfig, "--lr must be > 0");
  CasNetConfig config = args.config.resolve();

  train::DatasetOptions data;
  data.points_per_cloud = args.points;
  data.train_per_class = args.train_per_class;
  data.test_per_class = args.test_per_class;
  data.seed = args.data_seed.value_or(config.seed);
  const auto dataset = train::generate_dataset(data);
  config.m = config.output_count(args.points);
  config.validate(args.points);

  train::TrainOptions options;
  options.epochs = args.epochs;
  options.lr = args.lr;
  options.batch_size = args.batch;
  if (!args.quiet)
    options.on_epoch = [&out](const train::EpochRecord& r) {
      char line[160];
      std::snprintf(line, sizeof line,
                    "epoch %3zu  loss %.4f (task %.4f subset %.4f cosine %.4f)  "
                    "train %.3f  test %.3f  %.2fs\n",
                    r.epoch, r.loss.total, r.loss.task, r.loss.subset, r.loss.cosine,
                    r.train_accuracy, r.test_accuracy, r.seconds);
      out << line << std::flush;
    };
  const auto result = train::train(config, dataset, options);

  auto stored = result.sampler.to_stored();
  for (auto& entry : result.head.to_stored()) stored.push_back(std::move(entry));
  ad::write_weight_file(args.out, stored);
  const auto history_path = args.history.value_or(sibling(args.out, ".history.csv"));
  result.history.write_csv(history_path);
  const auto config_path = sibling(args.out, ".cfg");
  {
    std::ofstream file(config_path);
    if (!(file << config.to_text()))
      throw Error(Errc::IoFailure, "cannot write " + config_path.string());
  }

  const auto& last = result.history.epochs.back();
  out << "weights=" << args.out.string() << "\nhistory=" << history_path.string()
      << "\nconfig=" << config_path.string() << "\ntest_accuracy=" << last.test_accuracy
      << '\n';

  for (const auto& record : result.history.epochs)
    if (record.subset_check && !*record.subset_check)
      throw Error(Errc::InvalidConfig,
                  "hard sampler output was not a subset of its input at epoch " +
                      std::to_string(record.epoch));
  return 0;
}

}  // namespace cloudsample::cli
