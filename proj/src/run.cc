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

#include "anticipate/run.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "anticipate/config.h"
#include "anticipate/dataset_io.h"
#include "anticipate/errors.h"
#include "anticipate/format.h"
#include "json.hpp"

namespace anticipate::run {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(DataError::Kind::kMissingFile, path.string(), "cannot open");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> OptionalNumber(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string Cell(std::optional<double> v) {
  return v ? FormatDouble(*v) : std::string();
}

std::string Fixed(std::optional<double> v, int digits) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v);
  return buf;
}

}  // namespace

DatasetSplits LoadSplits(const fs::path& dir) {
  DatasetSplits s;
  s.train = LoadDataset(dir / "train");
  s.val = LoadDataset(dir / "val");
  s.test = LoadDataset(dir / "test");
  return s;
}

void WriteHistoryCsv(std::ostream& out,
                     std::span<const train::EpochRecord> history) {
  out << "epoch,train_loss,val_ap,val_attc,phi_used\n";
  for (const train::EpochRecord& r : history) {
    out << r.epoch << ',' << FormatDouble(r.train_loss) << ','
        << FormatDouble(r.val_ap) << ',' << Cell(r.val_attc) << ','
        << FormatDouble(r.phi_used) << '\n';
  }
}

void WriteEvaluation(const fs::path& dir, const eval::EvalReport& report) {
  fs::create_directories(dir);
  WriteText(dir / "report.json", eval::ReportJson(report));
  for (const eval::ClassReport& c : report.classes) {
    std::ostringstream csv;
    eval::WriteCurveCsv(csv, c.curve);
    WriteText(dir / ("curve_" + c.name + ".csv"), csv.str());
  }
}

eval::EvalReport Evaluate(const model::Model& model, const Dataset& dataset) {
  const std::vector<model::RiskTrajectory> trajectories =
      train::Predict(model, dataset);
  return eval::PerClassReport(trajectories, dataset.annotations);
}

eval::EvalReport TrainRun(const train::TrainConfig& config,
                          const DatasetSplits& splits, const fs::path& out_dir,
                          const train::Trainer::Logger& logger) {
  fs::create_directories(out_dir);
  WriteText(out_dir / "config.json", TrainConfigToJson(config));
  train::Trainer trainer(config, splits.train, splits.val);
  trainer.set_logger(logger);
  while (!trainer.done()) {
    const train::EpochRecord& rec = trainer.RunEpoch();
    if (logger) {
      logger("epoch " + std::to_string(rec.epoch) + " loss " +
             Fixed(rec.train_loss, 4) + " val_ap " + Fixed(rec.val_ap, 4) +
             " val_attc " + Fixed(rec.val_attc, 3) + " phi_used " +
             Fixed(rec.phi_used, 3));
    }
  }
  train::SaveCheckpoint(out_dir / "checkpoint.bin", trainer.MakeCheckpoint());
  std::ostringstream history;
  WriteHistoryCsv(history, trainer.state().history);
  WriteText(out_dir / "history.csv", history.str());
  const eval::EvalReport report = Evaluate(trainer.state().model, splits.test);
  WriteEvaluation(out_dir, report);
  return report;
}

std::vector<CompareRow> Compare(std::span<const fs::path> runs) {
  std::vector<CompareRow> rows;
  for (const fs::path& dir : runs) {
    if (!fs::is_directory(dir)) {
      throw DataError(DataError::Kind::kMissingFile, dir.string(),
                      "run directory not found");
    }
    CompareRow row;
    row.run = dir.filename().empty() ? dir.parent_path().filename().string()
                                     : dir.filename().string();
    const train::TrainConfig config =
        ParseTrainConfig(ReadText(dir / "config.json"));
    row.variant = std::string(loss::VariantName(config.loss.variant));
    row.recurrent =
        std::string(model::RecurrentKindName(config.model.recurrent_kind));

    std::istringstream history(ReadText(dir / "history.csv"));
    std::string line, last;
    std::getline(history, line);  // header
    while (std::getline(history, line)) {
      if (!line.empty()) last = line;
    }
    const std::vector<std::string> cells = SplitCsvLine(last);
    if (cells.size() != 5) {
      throw DataError(DataError::Kind::kMalformed,
                      (dir / "history.csv").string(), "no epoch rows");
    }
    row.epochs = std::stoi(cells[0]);
    row.final_val_ap = std::stod(cells[2]);
    if (!cells[3].empty()) row.final_val_attc = std::stod(cells[3]);

    const Json report = Json::parse(ReadText(dir / "report.json"), nullptr,
                                    /*allow_exceptions=*/false);
    if (report.is_discarded() || !report.contains("macro")) {
      throw DataError(DataError::Kind::kMalformed,
                      (dir / "report.json").string(), "not an evaluation report");
    }
    row.test_ap = report["macro"]["ap"].get<double>();
    row.test_attc = OptionalNumber(report["macro"]["attc"]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return rows;

  std::size_t best_ap = 0;
  std::optional<std::size_t> best_attc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].test_ap > rows[best_ap].test_ap) best_ap = i;
    if (rows[i].test_attc &&
        (!best_attc || *rows[i].test_attc > *rows[*best_attc].test_attc)) {
      best_attc = i;
    }
  }
  rows[best_ap].best_ap = true;
  if (best_attc) rows[*best_attc].best_attc = true;
  return rows;
}

void WriteCompareCsv(std::ostream& out, std::span<const CompareRow> rows) {
  out << "run,variant,recurrent,epochs,final_val_ap,final_val_attc,test_ap,"
         "test_attc,best_ap,best_attc\n";
  for (const CompareRow& r : rows) {
    out << r.run << ',' << r.variant << ',' << r.recurrent << ',' << r.epochs
        << ',' << FormatDouble(r.final_val_ap) << ',' << Cell(r.final_val_attc)
        << ',' << FormatDouble(r.test_ap) << ',' << Cell(r.test_attc) << ','
        << (r.best_ap ? 1 : 0) << ',' << (r.best_attc ? 1 : 0) << '\n';
  }
}

std::string FormatCompareTable(std::span<const CompareRow> rows) {
  std::size_t width = 3;
  for (const CompareRow& r : rows) width = std::max(width, r.run.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %-7s %-5s %6s %8s %9s\n",
                static_cast<int>(width), "run", "loss", "rnn", "epochs",
                "test_AP", "test_ATTC");
  out += buf;
  for (const CompareRow& r : rows) {
    std::string flags;
    if (r.best_ap) flags += " *AP";
    if (r.best_attc) flags += " *ATTC";
    std::snprintf(buf, sizeof(buf), "%-*s  %-7s %-5s %6d %8s %9s%s\n",
                  static_cast<int>(width), r.run.c_str(), r.variant.c_str(),
                  r.recurrent.c_str(), r.epochs, Fixed(r.test_ap, 4).c_str(),
                  Fixed(r.test_attc, 3).c_str(), flags.c_str());
    out += buf;
  }
  return out;
}

}  // namespace anticipate::run
