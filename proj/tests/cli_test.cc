// Copyright 2026 The Anticipate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the anticipate binary and checks exit codes and outputs.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "anticipate/config.h"
#include "anticipate/dataset_io.h"
#include "anticipate/synthetic.h"
#include "test_util.h"

namespace anticipate {
namespace {

namespace fs = std::filesystem;
using testing_util::TempDir;

int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(ANTICIPATE_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void Write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string Read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = TempDir("cli");
    Write(dir_ / "syn.json",
          R"({"num_clips": 30, "num_frames": 10, "precursor_onset_frames": 5,
              "precursor_growth_tau": 3, "D_g": 2, "D_l": 2, "K": 2})");
    Write(dir_ / "train.json",
          R"({"loss": {"variant": "AdaLEA"},
              "model": {"m": 3, "D_g": 2, "D_l": 2, "K": 2, "attention_dim": 3},
              "epochs": 2, "batch_size": 4, "learning_rate": 0.01})");
  }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, EndToEnd) {
  ASSERT_EQ(RunCli("gen-data --config " + P("syn.json") + " --out " + P("data")),
            0);
  ASSERT_EQ(RunCli("train --quiet --config " + P("train.json") + " --data " +
                P("data") + " --out " + P("run1")),
            0);
  ASSERT_EQ(RunCli("train --quiet --config " + P("train.json") + " --data " +
                P("data") + " --out " + P("run2")),
            0);
  EXPECT_EQ(Read(dir_ / "run1" / "history.csv"),
            Read(dir_ / "run2" / "history.csv"));
  EXPECT_EQ(Read(dir_ / "run1" / "report.json"),
            Read(dir_ / "run2" / "report.json"));

  EXPECT_EQ(RunCli("eval --checkpoint " + P("run1/checkpoint.bin") + " --data " +
                P("data") + " --out " + P("eval")),
            0);
  EXPECT_EQ(Read(dir_ / "eval" / "report.json"),
            Read(dir_ / "run1" / "report.json"));
  EXPECT_EQ(RunCli("compare " + P("run1") + " " + P("run2") + " --csv " +
                P("cmp.csv")),
            0);
  EXPECT_NE(Read(dir_ / "cmp.csv").find("run1,AdaLEA,qrnn,2,"),
            std::string::npos);
  EXPECT_EQ(RunCli("schedule --epochs 3 --frames 20 --phi 0,0.5 --out " +
                P("sched.csv")),
            0);
  EXPECT_EQ(Read(dir_ / "sched.csv").substr(0, 16), "epoch,t,d,alpha\n");
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("train --config " + P("train.json")), 2);
  Write(dir_ / "bad.json", R"({"epochs": 2, "colour": "red"})");
  EXPECT_EQ(RunCli("train --config " + P("bad.json") + " --data " + P("data") +
                " --out " + P("x")),
            2);
  EXPECT_EQ(RunCli("gen-data --config " + P("missing.json") + " --out " +
                P("d")),
            2);
  EXPECT_EQ(RunCli("gen-data --out " + P("d") + " --fractions 0.5,0.5,0.5"), 2);
}

TEST_F(CliTest, DataErrorsExitThree) {
  EXPECT_EQ(RunCli("train --config " + P("train.json") + " --data " +
                P("nowhere") + " --out " + P("x")),
            3);
  EXPECT_EQ(RunCli("compare " + P("nowhere")), 3);
  Write(dir_ / "junk.bin", "not a checkpoint at all");
  EXPECT_EQ(RunCli("eval --checkpoint " + P("junk.bin") + " --data " + P("x")),
            3);
}

TEST_F(CliTest, DataWithNonFiniteFeaturesExitsThree) {
  SyntheticConfig c = ParseSyntheticConfig(Read(dir_ / "syn.json"));
  Dataset d = GenerateSynthetic(c);
  d.features[0].global_feats(0, 0) = std::numeric_limits<double>::infinity();
  for (const char* split : {"train", "val", "test"}) {
    SaveDataset(dir_ / "inf" / split, d);
  }
  EXPECT_EQ(RunCli("train --config " + P("train.json") + " --data " + P("inf") +
                   " --out " + P("x")),
            3);
}

// Plain SGD with a step near the largest double overflows the weights.
TEST_F(CliTest, DivergenceExitsFour) {
  ASSERT_EQ(RunCli("gen-data --config " + P("syn.json") + " --out " + P("data")),
            0);
  Write(dir_ / "huge.json",
        R"({"model": {"m": 3, "D_g": 2, "D_l": 2, "K": 2, "attention_dim": 3},
            "epochs": 3, "batch_size": 4, "learning_rate": 1e308,
            "optimizer": {"kind": "sgd_momentum"}})");
  EXPECT_EQ(RunCli("train --config " + P("huge.json") + " --data " + P("data") +
                   " --out " + P("x")),
            4);
}

}  // namespace
}  // namespace anticipate
