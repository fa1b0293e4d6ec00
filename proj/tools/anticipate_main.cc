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

// anticipate: generate data, train, evaluate, compare runs and dump loss
// schedules.
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 data error,
// 4 numeric divergence.

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anticipate/config.h"
#include "anticipate/dataset_io.h"
#include "anticipate/errors.h"
#include "anticipate/loss.h"
#include "anticipate/run.h"
#include "anticipate/split.h"
#include "anticipate/synthetic.h"
#include "anticipate/train.h"

namespace {

namespace fs = std::filesystem;
using namespace anticipate;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

void Log(const std::string& message) { std::cerr << message << '\n'; }

int GenData(const std::string& config_path, const fs::path& out,
            std::vector<double> fractions, std::optional<std::uint64_t> seed) {
  SyntheticConfig config;
  if (!config_path.empty()) {
    config = ParseSyntheticConfig(ReadConfigFile(config_path));
  }
  if (seed) config.seed = *seed;
  ValidateSyntheticConfig(config);
  if (fractions.size() != 3) {
    throw ConfigError("fractions", "expected train,val,test");
  }
  const Dataset all = GenerateSynthetic(config);
  const DatasetSplits splits = SplitDataset(
      all, {fractions[0], fractions[1], fractions[2]}, config.seed);
  SaveDataset(out / "train", splits.train);
  SaveDataset(out / "val", splits.val);
  SaveDataset(out / "test", splits.test);
  DatasetMeta meta;
  meta.name = "synthetic";
  meta.train_size = splits.train.size();
  meta.val_size = splits.val.size();
  meta.test_size = splits.test.size();
  meta.frame_rate_F = config.frame_rate_F;
  meta.num_classes = config.num_classes;
  SaveMeta(out, meta);
  std::cout << "wrote " << all.size() << " clips (" << all.num_positives()
            << " positive) to " << out.string() << ": train "
            << meta.train_size << ", val " << meta.val_size << ", test "
            << meta.test_size << '\n';
  return kExitOk;
}

int Train(const std::string& config_path, const fs::path& data,
          const fs::path& out, bool quiet) {
  const train::TrainConfig config = ParseTrainConfig(ReadConfigFile(config_path));
  const DatasetSplits splits = run::LoadSplits(data);
  const eval::EvalReport report =
      run::TrainRun(config, splits, out,
                    quiet ? train::Trainer::Logger() : train::Trainer::Logger(Log));
  std::cout << eval::ReportJson(report);
  return kExitOk;
}

int Eval(const fs::path& checkpoint, const fs::path& data,
         const std::string& split, const std::string& out) {
  const train::Checkpoint ckpt = train::LoadCheckpoint(checkpoint);
  const Dataset dataset = LoadDataset(data / split);
  const eval::EvalReport report = run::Evaluate(ckpt.state.model, dataset);
  if (!out.empty()) run::WriteEvaluation(out, report);
  std::cout << eval::ReportJson(report);
  return kExitOk;
}

int Compare(const std::vector<std::string>& dirs, const std::string& csv) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  const std::vector<run::CompareRow> rows = run::Compare(paths);
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw Error("cannot write " + csv);
    run::WriteCompareCsv(out, rows);
  }
  std::cout << run::FormatCompareTable(rows);
  return kExitOk;
}

int Schedule(const std::string& config_path, int epochs, int frames,
             const std::vector<double>& phi, const std::string& out) {
  loss::LossConfig config;
  if (!config_path.empty()) {
    config = ParseTrainConfig(ReadConfigFile(config_path)).loss;
  }
  const std::vector<loss::ScheduleRow> rows =
      loss::DumpSchedule(config, epochs, frames, phi);
  if (out.empty()) {
    loss::WriteScheduleCsv(std::cout, rows);
  } else {
    std::ofstream file(out);
    if (!file) throw Error("cannot write " + out);
    loss::WriteScheduleCsv(file, rows);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early accident anticipation: data, training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, checkpoint, split = "test", csv;
  std::vector<double> fractions{0.8, 0.1, 0.1};
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  int epochs = 10, frames = 100;
  std::vector<double> phi;
  std::vector<std::string> runs;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--config", config_path, "Synthetic data config (JSON)");
  gen->add_option("--out", out_dir, "Output dataset directory")->required();
  gen->add_option("--fractions", fractions, "train,val,test fractions")
      ->delimiter(',')
      ->expected(3);
  gen->add_option("--seed", seed, "Override the config seed");

  CLI::App* tr = app.add_subcommand("train", "Train one model");
  tr->add_option("--config", config_path, "Training config (JSON)")->required();
  tr->add_option("--data", data_dir, "Dataset directory")->required();
  tr->add_option("--out", out_dir, "Run directory")->required();
  tr->add_flag("--quiet", quiet, "No per-epoch log");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "checkpoint.bin")->required();
  ev->add_option("--data", data_dir, "Dataset directory")->required();
  ev->add_option("--split", split, "Split to score")
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_option("--out", out_dir, "Write report.json and curves here");

  CLI::App* cmp = app.add_subcommand("compare", "Compare run directories");
  cmp->add_option("runs", runs, "Run directories")->required();
  cmp->add_option("--csv", csv, "Also write the table as CSV");

  CLI::App* sch = app.add_subcommand("schedule", "Dump penalty weights");
  sch->add_option("--config", config_path, "Training config (JSON)");
  sch->add_option("--epochs", epochs, "Epochs")->required();
  sch->add_option("--frames", frames, "Frames per clip (accident at the last)")
      ->required();
  sch->add_option("--phi", phi, "phi(0),phi(1),... in seconds")->delimiter(',');
  sch->add_option("--out", out_dir, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return GenData(config_path, out_dir, fractions, seed);
    if (*tr) return Train(config_path, data_dir, out_dir, quiet);
    if (*ev) return Eval(checkpoint, data_dir, split, out_dir);
    if (*cmp) return Compare(runs, csv);
    if (*sch) return Schedule(config_path, epochs, frames, phi, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << e.what() << '\n';
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.location() << ": " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
