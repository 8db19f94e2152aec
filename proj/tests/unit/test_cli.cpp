#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "normclash/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::string& args) {
  const fs::path err_file = fs::temp_directory_path() / "normclash_cli_stderr.txt";
  const std::string cmd = std::string(NORMCLASH_CLI) + " " + args + " 2>" + err_file.string();
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = normclash::read_file(err_file);
  return r;
}

const char* kTinyConfig = R"({
  "seed": 3,
  "output_dir": "out",
  "dataset": {"source": "blobs", "train_size": 120, "eval_size": 30, "dim": 6, "classes": 3, "spread": 0.1},
  "model": {"hidden": [8]},
  "train": {"epochs": 2, "batch_size": 32, "learning_rate": 0.05},
  "epsilon": {"linf": 0.05},
  "inner_attack": {"iterations": 3},
  "defenses": [
    {"name": "natural", "kind": "natural"},
    {"name": "mat-rand", "kind": "mat-rand"},
    {"name": "rat-2", "kind": "rat", "norm": "l2", "noise": "gaussian"}
  ],
  "attacks": [
    {"name": "pgd-inf", "family": "pgd", "norm": "linf", "iterations": 3, "eot_samples": 2},
    {"name": "cw", "family": "cw", "iterations": 5, "search_steps": 2}
  ],
  "evaluation": {"eot_samples": 3, "eps_sweep": [0.5, 2]}
})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("normclash_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.json") << kTinyConfig;
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config() const { return (dir_ / "tiny.json").string(); }
  fs::path dir_;
};

}  // namespace

TEST(CliBasic, Calibrate) {
  const auto r = run("calibrate 0.1 784");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1.361802\n");
}

TEST(CliBasic, GeometryRowsDecrease) {
  const auto r = run("geometry --dims 100,1000,3072 --samples 10000");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream is(r.out);
  std::string line;
  while (std::getline(is, line) && line.rfind('#', 0) == 0) {
  }
  EXPECT_EQ(line.rfind("d,r2,hoeffding_log10", 0), 0u);
  double prev = 1.0;
  int rows = 0;
  while (std::getline(is, line)) {
    std::istringstream row(line);
    std::string d, r2, h;
    std::getline(row, d, ',');
    std::getline(row, r2, ',');
    std::getline(row, h, ',');
    EXPECT_LT(std::stod(h), prev) << line;
    prev = std::stod(h);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST_F(Cli, ConfigErrorIsJsonWithExitCode) {
  std::ofstream(dir_ / "bad.json") << R"({"seed": 1, "dataset": {"source": "blobs", "dim": 4},
    "epsilon": {"linf": 0.1}, "defenses": [{"name": "x", "kind": "trades"}]})";
  const auto r = run("train --config " + (dir_ / "bad.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(R"("error":"config")"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(R"("field":"defenses[0].kind")"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingCheckpointsAreListed) {
  const auto r = run("evaluate --config " + config());
  EXPECT_NE(r.code, 0);
  for (const char* name : {"natural", "mat-rand", "rat-2"}) EXPECT_NE(r.err.find(name), std::string::npos) << r.err;
}

TEST_F(Cli, TrainAndEvaluateAreReproducible) {
  ASSERT_EQ(run("train --config " + config()).code, 0);
  const auto first = normclash::read_file(dir_ / "out" / "rat-2.ckpt.json");
  ASSERT_EQ(run("train --config " + config() + " --out " + (dir_ / "again").string()).code, 0);
  EXPECT_EQ(normclash::read_file(dir_ / "again" / "rat-2.ckpt.json"), first);
  EXPECT_EQ(normclash::read_file(dir_ / "again" / "natural.train.csv"),
            normclash::read_file(dir_ / "out" / "natural.train.csv"));

  ASSERT_EQ(run("evaluate --config " + config()).code, 0);
  const auto report = normclash::read_file(dir_ / "out" / "report.csv");
  EXPECT_NE(report.find("defense,natural,pgd-inf,cw,min_acc"), std::string::npos);
  ASSERT_EQ(run("evaluate --config " + config() + " --threads 2").code, 0);
  EXPECT_EQ(normclash::read_file(dir_ / "out" / "report.csv"), report);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "ballstats.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "eps_sweep.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "report.json"));

  const auto a = run("attack --config " + config() + " --checkpoint " + (dir_ / "out" / "natural.ckpt.json").string() +
                     " --attack cw");
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "natural.cw.samples.csv"));
}
