#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cloudsample/io.hpp"
#include "cloudsample/training.hpp"
#include "cloudsample_cli/cli.hpp"
#include "test_support.hpp"

namespace cloudsample::cli {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

TEST(Cli, NoSubcommandIsValidationError) { EXPECT_EQ(invoke({}).code, kExitValidation); }

TEST(Cli, HelpExitsZero) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("sample"), std::string::npos);
}

TEST(Cli, UnknownFlagPrintsUsage) {
  testing::TempDir dir;
  const auto r = invoke({"sample", "--input", "x.xyz", "--bogus"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
}

TEST(Sample, RandomHalvesAndIsDeterministic) {
  testing::TempDir dir;
  io::write_xyz(dir / "in.xyz", testing::uniform_cloud(1024, 1));
  for (const char* name : {"a.xyz", "b.xyz"}) {
    const auto r = invoke({"sample", "--input", (dir / "in.xyz").string(), "--method", "rs",
                           "--ratio", "2", "--seed", "7", "--output", (dir / name).string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("t_sample_s="), std::string::npos);
  }
  EXPECT_EQ(io::read_xyz(dir / "a.xyz").size(), 512u);
  EXPECT_EQ(read_text(dir / "a.xyz"), read_text(dir / "b.xyz"));
}

TEST(Sample, ChunkedFpsOnLargeBinCloud) {
  testing::TempDir dir;
  io::write_kitti_bin(dir / "in.bin", testing::uniform_cloud(8192, 2, -40, 40));
  const auto r = invoke({"sample", "--input", (dir / "in.bin").string(), "--method", "fps-chunked",
                         "--chunks", "8", "--ratio", "2", "--output", (dir / "out.bin").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(io::read_kitti_bin(dir / "out.bin").size(), 4096u);
}

TEST(Sample, MissingInputIsIoError) {
  testing::TempDir dir;
  const auto r = invoke({"sample", "--input", (dir / "none.xyz").string()});
  EXPECT_EQ(r.code, kExitIo);
}

TEST(Sample, MalformedBinIsIoError) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.bin") << "seventeen bytes!!";
  EXPECT_EQ(invoke({"sample", "--input", (dir / "bad.bin").string()}).code, kExitIo);
}

TEST(Sample, BadRatioIsValidationError) {
  testing::TempDir dir;
  io::write_xyz(dir / "in.xyz", testing::uniform_cloud(10, 3));
  EXPECT_EQ(invoke({"sample", "--input", (dir / "in.xyz").string(), "--ratio", "20"}).code,
            kExitValidation);
}

TEST(Sample, CasnetNeedsWeights) {
  testing::TempDir dir;
  io::write_xyz(dir / "in.xyz", testing::uniform_cloud(64, 4));
  EXPECT_EQ(invoke({"sample", "--input", (dir / "in.xyz").string(), "--method", "casnet"}).code,
            kExitValidation);
}

/// Trains a tiny checkpoint through the CLI; returns its path.
std::filesystem::path tiny_checkpoint(const testing::TempDir& dir, const std::string& mode) {
  const auto path = dir / ("w-" + mode + ".cswt");
  const auto r = invoke({"train", "--k", "1", "--oa", "1", "--c", "8", "--mode", mode, "--count",
                         "8", "--set", "embed_hidden=8", "score_hidden=16", "--epochs", "2",
                         "--points", "32", "--train-per-class", "3", "--test-per-class", "1",
                         "--quiet", "--out", path.string()});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  return path;
}

TEST(Train, WritesCheckpointHistoryAndConfig) {
  testing::TempDir dir;
  const auto weights = tiny_checkpoint(dir, "ahsn");
  EXPECT_TRUE(std::filesystem::exists(weights));
  auto history = weights;
  history.replace_extension(".history.csv");
  EXPECT_EQ(count_lines(read_text(history)), 3u);  // header + 2 epochs
  auto config = weights;
  config.replace_extension(".cfg");
  const auto parsed = CasNetConfig::load(config);
  EXPECT_EQ(parsed.k, 1u);
  EXPECT_EQ(parsed.m, 8u);
}

TEST(Sample, CasnetHardOutputIsSubset) {
  testing::TempDir dir;
  const auto weights = tiny_checkpoint(dir, "ahsn");
  const auto cloud = testing::uniform_cloud(64, 5);
  io::write_xyz(dir / "in.xyz", cloud);
  const auto r = invoke({"sample", "--input", (dir / "in.xyz").string(), "--method", "casnet",
                         "--weights", weights.string(), "--k", "1", "--oa", "1", "--mode", "ahsn",
                         "--count", "8", "--output", (dir / "out.xyz").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto out = io::read_xyz(dir / "out.xyz");
  EXPECT_EQ(out.size(), 8u);
  EXPECT_TRUE(train::is_exact_subset(out, cloud));
}

TEST(Sample, CasnetRejectsLayerMismatch) {
  testing::TempDir dir;
  const auto weights = tiny_checkpoint(dir, "ahsn");
  io::write_xyz(dir / "in.xyz", testing::uniform_cloud(64, 6));
  EXPECT_EQ(invoke({"sample", "--input", (dir / "in.xyz").string(), "--method", "casnet",
                    "--weights", weights.string(), "--k", "1", "--oa", "3", "--count", "8"})
                .code,
            kExitValidation);
}

TEST(Bench, ReportsEveryMethodAndRatio) {
  testing::TempDir dir;
  std::filesystem::create_directory(dir / "clouds");
  for (int i = 0; i < 3; ++i)
    io::write_kitti_bin(dir / "clouds" / (std::to_string(i) + ".bin"),
                        testing::uniform_cloud(256, 10 + i));
  const auto r = invoke({"bench", "--input", (dir / "clouds").string(), "--methods",
                         "rs,fps,fps-chunked", "--ratios", "2,4", "--repeats", "3", "--report",
                         (dir / "r.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = read_text(dir / "r.csv");
  EXPECT_EQ(csv.rfind(io::kReportHeader, 0), 0u);
  EXPECT_EQ(count_lines(csv), 7u);
  EXPECT_NE(csv.find("\nfps,256,64,"), std::string::npos) << csv;
}

TEST(Bench, EmptyDirectoryIsValidationError) {
  testing::TempDir dir;
  EXPECT_EQ(invoke({"bench", "--input", dir.path().string()}).code, kExitValidation);
}

TEST(Bench, MissingDirectoryIsIoError) {
  testing::TempDir dir;
  EXPECT_EQ(invoke({"bench", "--input", (dir / "none").string()}).code, kExitIo);
}

TEST(Nnbench, AllBackendsMatch) {
  const auto r = invoke({"nnbench", "--n", "256", "--k", "1,8", "--radius", "1000", "--repeats", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("n,k,backend,t_s,match\n", 0), 0u);
  EXPECT_EQ(r.out.find(",false"), std::string::npos) << r.out;
  EXPECT_EQ(count_lines(r.out), 7u);
}

TEST(Gradcheck, OpsPass) {
  const auto r = invoke({"gradcheck", "--ops"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("matmul,"), std::string::npos);
}

TEST(Config, FileAndOverridesCombine) {
  testing::TempDir dir;
  std::ofstream(dir / "c.cfg") << "k=1\noa=1\nc=8\nembed_hidden=8\nscore_hidden=16\nm=8\n";
  const auto path = dir / "w.cswt";
  const auto r = invoke({"train", "--config", (dir / "c.cfg").string(), "--mode", "assn",
                         "--epochs", "1", "--points", "32", "--train-per-class", "2",
                         "--test-per-class", "1", "--quiet", "--out", path.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto cfg = path;
  cfg.replace_extension(".cfg");
  EXPECT_EQ(CasNetConfig::load(cfg).mode, SamplingMode::Soft);
  EXPECT_EQ(invoke({"train", "--config", (dir / "absent.cfg").string(), "--out", path.string()}).code,
            kExitValidation);
  EXPECT_EQ(invoke({"train", "--set", "nonsense", "--out", path.string()}).code, kExitValidation);
}

}  // namespace
}  // namespace cloudsample::cli
