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

// On-disk dataset interchange.
//
// A split directory holds two files:
//
//   annotations.jsonl  one ClipAnnotation per line, snake_case keys, absent
//                      optionals omitted
//   features.bin       little-endian container:
//                        "EANT" | version u32 | clip count u64 |
//                        D_g u32 | K u32 | D_l u32
//                      then per clip:
//                        id length u32 | id bytes | num_frames u32 |
//                        global f64[num_frames * D_g] |
//                        local f64[num_frames * K * D_l] |
//                        mask u8[num_frames * K]
//
// A dataset directory written by gen-data holds meta.json plus train/, val/
// and test/ split directories.

#ifndef ANTICIPATE_DATASET_IO_H_
#define ANTICIPATE_DATASET_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "anticipate/dataset.h"

namespace anticipate {

inline constexpr char kAnnotationsFile[] = "annotations.jsonl";
inline constexpr char kFeaturesFile[] = "features.bin";
inline constexpr char kMetaFile[] = "meta.json";
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

void WriteAnnotations(std::ostream& out, const Dataset& dataset);
// `source` names the stream in error messages.
std::vector<ClipAnnotation> ReadAnnotations(std::istream& in,
                                            const std::string& source);

void WriteFeatures(std::ostream& out, const Dataset& dataset);
std::vector<FeatureSequence> ReadFeatures(std::istream& in,
                                          const std::string& source);

void SaveDataset(const std::filesystem::path& dir, const Dataset& dataset);
// Validates every type invariant; throws DataError with the file, line or
// clip id of the first problem.
Dataset LoadDataset(const std::filesystem::path& dir);

void SaveMeta(const std::filesystem::path& dir, const DatasetMeta& meta);
DatasetMeta LoadMeta(const std::filesystem::path& dir);

// FNV-1a over the serialized annotations and features.
std::uint64_t Fingerprint(const Dataset& dataset);

}  // namespace anticipate

#endif  // ANTICIPATE_DATASET_IO_H_
