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

// JSON forms of the configuration structs. Keys mirror the field names;
// missing keys keep their defaults and unknown keys are rejected with a
// ConfigError naming the dotted path.

#ifndef ANTICIPATE_CONFIG_H_
#define ANTICIPATE_CONFIG_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "anticipate/synthetic.h"
#include "anticipate/train.h"

namespace anticipate {

std::string TrainConfigToJson(const train::TrainConfig& config);
train::TrainConfig ParseTrainConfig(std::string_view text);

std::string SyntheticConfigToJson(const SyntheticConfig& config);
SyntheticConfig ParseSyntheticConfig(std::string_view text);

// Reads a whole file; throws ConfigError("path") when it cannot be opened.
std::string ReadConfigFile(const std::filesystem::path& path);

}  // namespace anticipate

#endif  // ANTICIPATE_CONFIG_H_
