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

#include "anticipate/dataset_io.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "anticipate/errors.h"
#include "binary_io.h"
#include "json.hpp"

namespace anticipate {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'E', 'A', 'N', 'T'};

[[noreturn]] void Malformed(const std::string& location,
                            const std::string& what) {
  throw DataError(DataError::Kind::kMalformed, location, what);
}

using internal::PutF64;
using internal::PutU32;
using internal::PutU64;

Json AnnotationToJson(const ClipAnnotation& a) {
  Json j;
  j["clip_id"] = a.clip_id;
  j["label"] = std::string(LabelName(a.label));
  if (a.accident_start_T) j["accident_start_T"] = *a.accident_start_T;
  j["num_frames"] = a.num_frames;
  if (a.risk_class) j["risk_class"] = std::string(RiskClassName(*a.risk_class));
  j["frame_rate_F"] = a.frame_rate_F;
  return j;
}

ClipAnnotation AnnotationFromJson(const Json& j, const std::string& where) {
  if (!j.is_object()) Malformed(where, "record is not a JSON object");
  static const char* kKnown[] = {"clip_id",    "label",      "accident_start_T",
                                 "num_frames", "risk_class", "frame_rate_F"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) ==
        std::end(kKnown)) {
      Malformed(where, "unknown key '" + key + "'");
    }
  }
  auto required = [&](const char* key) -> const Json& {
    if (!j.contains(key)) Malformed(where, std::string("missing '") + key + "'");
    return j.at(key);
  };
  ClipAnnotation a;
  const Json& id = required("clip_id");
  if (!id.is_string()) Malformed(where, "clip_id must be a string");
  a.clip_id = id.get<std::string>();

  const Json& label = required("label");
  if (!label.is_string()) Malformed(where, "label must be a string");
  auto parsed = ParseLabel(label.get<std::string>());
  if (!parsed) Malformed(where, "unknown label '" + label.get<std::string>() + "'");
  a.label = *parsed;

  const Json& frames = required("num_frames");
  if (!frames.is_number_integer()) Malformed(where, "num_frames must be an integer");
  a.num_frames = frames.get<int>();

  const Json& rate = required("frame_rate_F");
  if (!rate.is_number()) Malformed(where, "frame_rate_F must be a number");
  a.frame_rate_F = rate.get<double>();

  if (j.contains("accident_start_T")) {
    const Json& t = j.at("accident_start_T");
    if (!t.is_number_integer()) {
      Malformed(where, "accident_start_T must be an integer");
    }
    a.accident_start_T = t.get<int>();
  }
  if (j.contains("risk_class")) {
    const Json& rc = j.at("risk_class");
    if (!rc.is_string()) Malformed(where, "risk_class must be a string");
    auto cls = ParseRiskClass(rc.get<std::string>());
    if (!cls) Malformed(where, "unknown risk_class '" + rc.get<std::string>() + "'");
    a.risk_class = *cls;
  }
  return a;
}

std::ifstream OpenOrThrow(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) {
    throw DataError(DataError::Kind::kMissingFile, path.string(),
                    "cannot open");
  }
  return in;
}

std::ofstream CreateOrThrow(const std::filesystem::path& path,
                            std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void WriteAnnotations(std::ostream& out, const Dataset& dataset) {
  for (const ClipAnnotation& a : dataset.annotations) {
    out << AnnotationToJson(a).dump() << '\n';
  }
}

std::vector<ClipAnnotation> ReadAnnotations(std::istream& in,
                                            const std::string& source) {
  std::vector<ClipAnnotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) Malformed(where, "invalid JSON");
    out.push_back(AnnotationFromJson(j, where));
  }
  return out;
}

void WriteFeatures(std::ostream& out, const Dataset& dataset) {
  const FeatureSequence* first =
      dataset.features.empty() ? nullptr : &dataset.features.front();
  out.write(kMagic, 4);
  PutU32(out, kFeatureFormatVersion);
  PutU64(out, dataset.features.size());
  PutU32(out, first ? first->global_dim() : 0);
  PutU32(out, first ? first->num_objects() : 0);
  PutU32(out, first ? first->local_dim() : 0);
  for (const FeatureSequence& f : dataset.features) {
    PutU32(out, f.clip_id.size());
    out.write(f.clip_id.data(), static_cast<std::streamsize>(f.clip_id.size()));
    PutU32(out, f.num_frames());
    for (double v : f.global_feats.data()) PutF64(out, v);
    for (const Tensor& locals : f.local_feats) {
      for (double v : locals.data()) PutF64(out, v);
    }
    for (const ObjectMask& mask : f.local_mask) {
      for (std::uint8_t m : mask) out.put(static_cast<char>(m ? 1 : 0));
    }
  }
}

std::vector<FeatureSequence> ReadFeatures(std::istream& in,
                                          const std::string& source) {
  internal::Reader r(in, [&](const std::string& what) { Malformed(source, what); });
  char magic[4];
  r.Bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) Malformed(source, "bad magic");
  const std::uint32_t version = r.U32();
  if (version != kFeatureFormatVersion) {
    Malformed(source, "unsupported container version " + std::to_string(version));
  }
  const std::uint64_t count = r.U64();
  const std::uint32_t dg = r.U32(), k = r.U32(), dl = r.U32();
  constexpr std::uint32_t kMaxFrames = 1u << 24;
  std::vector<FeatureSequence> out;
  for (std::uint64_t c = 0; c < count; ++c) {
    FeatureSequence f;
    const std::uint32_t id_len = r.U32();
    if (id_len == 0 || id_len > 4096) Malformed(source, "bad clip id length");
    f.clip_id.resize(id_len);
    r.Bytes(f.clip_id.data(), id_len);
    const std::uint32_t frames = r.U32();
    if (frames > kMaxFrames) {
      Malformed(source, "clip " + f.clip_id + " has implausible frame count");
    }
    f.global_feats = Tensor(frames, dg);
    for (double& v : f.global_feats.data()) v = r.F64();
    f.local_feats.reserve(frames);
    for (std::uint32_t t = 0; t < frames; ++t) {
      Tensor locals(k, dl);
      for (double& v : locals.data()) v = r.F64();
      f.local_feats.push_back(std::move(locals));
    }
    f.local_mask.reserve(frames);
    for (std::uint32_t t = 0; t < frames; ++t) {
      ObjectMask mask(k);
      r.Bytes(reinterpret_cast<char*>(mask.data()), k);
      for (std::uint8_t m : mask) {
        if (m > 1) Malformed(source, "clip " + f.clip_id + " has mask byte > 1");
      }
      f.local_mask.push_back(std::move(mask));
    }
    out.push_back(std::move(f));
  }
  if (!r.AtEnd()) {
    Malformed(source, "trailing bytes after last clip");
  }
  return out;
}

void SaveDataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  {
    auto out = CreateOrThrow(dir / kAnnotationsFile);
    WriteAnnotations(out, dataset);
  }
  auto out = CreateOrThrow(dir / kFeaturesFile, std::ios::binary);
  WriteFeatures(out, dataset);
}

Dataset LoadDataset(const std::filesystem::path& dir) {
  Dataset d;
  {
    const auto path = dir / kAnnotationsFile;
    auto in = OpenOrThrow(path);
    d.annotations = ReadAnnotations(in, path.string());
  }
  const auto path = dir / kFeaturesFile;
  auto in = OpenOrThrow(path, std::ios::binary);
  d.features = ReadFeatures(in, path.string());
  ValidateDataset(d);
  return d;
}

void SaveMeta(const std::filesystem::path& dir, const DatasetMeta& meta) {
  Json j;
  j["name"] = meta.name;
  j["split_sizes"] = {{"train", meta.train_size},
                      {"val", meta.val_size},
                      {"test", meta.test_size}};
  j["frame_rate_F"] = meta.frame_rate_F;
  j["num_classes"] = meta.num_classes;
  std::filesystem::create_directories(dir);
  auto out = CreateOrThrow(dir / kMetaFile);
  out << j.dump(2) << '\n';
}

DatasetMeta LoadMeta(const std::filesystem::path& dir) {
  const auto path = dir / kMetaFile;
  auto in = OpenOrThrow(path);
  Json j = Json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) Malformed(path.string(), "invalid JSON");
  DatasetMeta meta;
  try {
    meta.name = j.at("name").get<std::string>();
    meta.train_size = j.at("split_sizes").at("train").get<std::size_t>();
    meta.val_size = j.at("split_sizes").at("val").get<std::size_t>();
    meta.test_size = j.at("split_sizes").at("test").get<std::size_t>();
    meta.frame_rate_F = j.at("frame_rate_F").get<double>();
    meta.num_classes = j.at("num_classes").get<int>();
  } catch (const Json::exception& e) {
    Malformed(path.string(), e.what());
  }
  return meta;
}

std::uint64_t Fingerprint(const Dataset& dataset) {
  std::ostringstream buf(std::ios::binary);
  WriteAnnotations(buf, dataset);
  WriteFeatures(buf, dataset);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : buf.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace anticipate
