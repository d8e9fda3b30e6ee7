#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "sic/binio.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("sic_test_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run sicwb(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" SICWB_PATH "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void expect_error_line(const Run& r, int code, const std::string& kind) {
  EXPECT_EQ(r.code, code) << r.err;
  const std::regex line("^error\tkind=" + kind + "\texit=" + std::to_string(code) + "\tmessage=[^\n\t]*\n$");
  EXPECT_TRUE(std::regex_match(r.err, line)) << r.err;
}

}  // namespace

TEST(Cli, CountParamsFullSizeFcnn) {
  const auto r = sicwb("count-params --family fcnn --layers 10 --init 32 --growth 32 --in-ch 2");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "3043937\n");
}

TEST(Cli, SearchOnEmptyCatalog) {
  std::ofstream(workdir() / "empty.tsv").flush();
  const auto r = sicwb("search --catalog empty.tsv --lat -61.5 --lon 2.0 --from 2019-07-01 --to 2019-07-31");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0 results\n");
}

TEST(Cli, HelpListsEveryFlag) {
  const auto r = sicwb("train --help");
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--seed", "--jobs", "--dataset", "--stages", "--augment", "--family", "--lr"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, DistinctExitCodes) {
  std::ofstream(workdir() / "empty.tsv").flush();
  expect_error_line(sicwb(""), 2, "usage");
  expect_error_line(sicwb("count-params --no-such-flag"), 2, "usage");
  expect_error_line(sicwb("--config missing.toml count-params"), 3, "config");
  std::ofstream(workdir() / "typo.toml") << "[count-params]\nlayrs=3\n";
  expect_error_line(sicwb("--config typo.toml count-params"), 3, "config");
  expect_error_line(sicwb("evaluate --checkpoint nope.sicm --dataset nowhere"), 4, "io");
  {
    std::ofstream bad(workdir() / "bad.sicm", std::ios::binary);
    bad << "NOPE-not-a-checkpoint";
  }
  fs::create_directories(workdir() / "ds" / "test");
  expect_error_line(sicwb("evaluate --checkpoint bad.sicm --dataset ds"), 5, "format");
  expect_error_line(sicwb("count-params --family fcnn --layers 2 --init 0"), 8, "invalid_argument");
  expect_error_line(sicwb("search --catalog empty.tsv --lat 95 --lon 0 --from 2019-07-01 --to 2019-07-02"), 6,
                    "geometry");
}

TEST(Cli, ConfigRoundTripFlagsWin) {
  auto r = sicwb("--write-config cfg.toml count-params --family unet --layers 2 --init 4 --growth 4");
  ASSERT_EQ(r.code, 0) << r.err;
  r = sicwb("--config cfg.toml count-params");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto from_config = r.out;
  r = sicwb("count-params --family unet --layers 2 --init 4 --growth 4");
  EXPECT_EQ(r.out, from_config);
  r = sicwb("--config cfg.toml count-params --init 5");
  const auto flag_wins = sicwb("count-params --family unet --layers 2 --init 5 --growth 4");
  EXPECT_EQ(r.out, flag_wins.out);
}

TEST(Cli, PipelineEndToEndIsDeterministic) {
  auto r = sicwb("synth --seed 3 --out cat --entries 24 --footprint-px 16 --coarse-factor 4 --region 200 "
                 "--from 2019-07-01 --to 2019-07-02 --insitu 50");
  ASSERT_EQ(r.code, 0) << r.err;
  r = sicwb("build-dataset --seed 3 --catalog cat --out ds --patch 16 --batch-size 4 --variance-threshold 0");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_FALSE(fs::is_empty(workdir() / "ds" / "train"));

  const std::string train =
      "train --seed 7 --jobs 1 --dataset S=ds --stages S:2 --test S --family fcnn --layers 2 --init 4 --growth 4 "
      "--batch-size 4 --quiet --out ";
  r = sicwb(train + "runA");
  ASSERT_EQ(r.code, 0) << r.err;
  r = sicwb(train + "runB");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(workdir() / "runA" / "CNN_S_S.csv"), slurp(workdir() / "runB" / "CNN_S_S.csv"));
  const auto ck = fs::path("checkpoints") / "CNN_S_S_e002.sicm";
  ASSERT_TRUE(fs::exists(workdir() / "runA" / ck));
  EXPECT_EQ(slurp(workdir() / "runA" / ck), slurp(workdir() / "runB" / ck));

  r = sicwb("evaluate --checkpoint runA/checkpoints/CNN_S_S_e002.sicm --dataset ds --split test");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("weighted_mae"), std::string::npos) << r.out;

  r = sicwb("export-trajectories --log runA/CNN_S_S.csv --out traj.csv");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(workdir() / "traj.csv").substr(0, 10), "run,epoch,");

  r = sicwb("search --catalog cat --lat -65 --lon 0 --from 2019-07-01 --to 2019-07-02 --max 3");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("results"), std::string::npos);

  r = sicwb("insitu --observations cat/insitu.tsv --chart cat/charts/2019-07-01.sicr --out bias.csv");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(workdir() / "bias.csv").substr(0, 14), "# sic-bias v1\n");
}

TEST(Cli, GradcheckPasses) {
  for (const char* family : {"fcnn", "unet", "densenet"}) {
    const auto r = sicwb(std::string("gradcheck --seed 1 --family ") + family);
    EXPECT_EQ(r.code, 0) << family << ": " << r.err;
  }
}
