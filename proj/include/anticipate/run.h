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

// Run directories.
//
//   config.json     the training config
//   checkpoint.bin  final parameters and training state
//   history.csv     epoch,train_loss,val_ap,val_attc,phi_used
//   report.json     test-split evaluation
//   curve_<c>.csv   q,precision,recall,mean_ttc,tp,fp,fn,tn per class

#ifndef ANTICIPATE_RUN_H_
#define ANTICIPATE_RUN_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anticipate/dataset.h"
#include "anticipate/eval.h"
#include "anticipate/split.h"
#include "anticipate/train.h"

namespace anticipate::run {

// Loads <dir>/{train,val,test}. Throws DataError.
DatasetSplits LoadSplits(const std::filesystem::path& dir);

void WriteHistoryCsv(std::ostream& out,
                     std::span<const train::EpochRecord> history);

// Writes report.json and one curve file per class into `dir`.
void WriteEvaluation(const std::filesystem::path& dir,
                     const eval::EvalReport& report);

eval::EvalReport Evaluate(const model::Model& model, const Dataset& dataset);

// Trains on splits.train/val, evaluates on splits.test and writes the full
// run directory. Returns the test report.
eval::EvalReport TrainRun(const train::TrainConfig& config,
                          const DatasetSplits& splits,
                          const std::filesystem::path& out_dir,
                          const train::Trainer::Logger& logger = {});

struct CompareRow {
  std::string run;
  std::string variant;
  std::string recurrent;
  int epochs = 0;
  double final_val_ap = 0.0;
  std::optional<double> final_val_attc;
  double test_ap = 0.0;
  std::optional<double> test_attc;
  bool best_ap = false;
  bool best_attc = false;
};

// Throws DataError naming a missing or incomplete run directory.
std::vector<CompareRow> Compare(std::span<const std::filesystem::path> runs);

void WriteCompareCsv(std::ostream& out, std::span<const CompareRow> rows);
std::string FormatCompareTable(std::span<const CompareRow> rows);

}  // namespace anticipate::run

#endif  // ANTICIPATE_RUN_H_
