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

#include "anticipate/config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "anticipate/errors.h"
#include "json.hpp"

namespace anticipate {
namespace {

using Json = nlohmann::ordered_json;

// Reads typed fields out of one JSON object and rejects whatever is left.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Name(""), "expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(Name(key), "unknown key");
    }
  }

  template <typename T>
  void Get(const char* key, T& out) {
    const Json* v = Find(key);
    if (v == nullptr) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(Name(key), "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) {
        throw ConfigError(Name(key), "expected an integer");
      }
      if (std::is_unsigned_v<T> && !v->is_number_unsigned()) {
        throw ConfigError(Name(key), "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(Name(key), "expected a number");
    } else {
      if (!v->is_string()) throw ConfigError(Name(key), "expected a string");
    }
    out = v->get<T>();
  }

  template <typename T>
  void GetOptional(const char* key, std::optional<T>& out) {
    const Json* v = Find(key);
    if (v == nullptr) return;
    if (v->is_null()) {
      out.reset();
      return;
    }
    T value{};
    Get(key, value);
    out = value;
  }

  const Json* Object(const char* key) { return Find(key); }

  std::string Name(const std::string& key) const {
    if (path_.empty()) return key;
    if (key.empty()) return path_;
    return path_ + "." + key;
  }

 private:
  const Json* Find(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json Parse(std::string_view text) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config", "invalid JSON");
  return j;
}

template <typename E>
E ParseEnum(const std::string& name, const std::string& field,
            std::initializer_list<std::pair<const char*, E>> options) {
  std::string allowed;
  for (const auto& [text, value] : options) {
    if (name == text) return value;
    allowed += allowed.empty() ? text : std::string(", ") + text;
  }
  throw ConfigError(field, "unknown value '" + name + "' (expected " +
                               allowed + ")");
}

Json LossToJson(const loss::LossConfig& c) {
  Json j;
  j["variant"] = std::string(loss::VariantName(c.variant));
  j["lambda"] = c.lambda;
  j["gamma"] = c.gamma;
  j["frame_rate_F"] = c.frame_rate_F;
  return j;
}

void LossFromJson(const Json& j, loss::LossConfig& c) {
  ObjectReader r(j, "loss");
  std::string variant(loss::VariantName(c.variant));
  r.Get("variant", variant);
  const auto parsed = loss::ParseVariant(variant);
  if (!parsed) {
    throw ConfigError(r.Name("variant"), "unknown value '" + variant +
                                             "' (expected EL, LEA, AdaLEA)");
  }
  c.variant = *parsed;
  r.Get("lambda", c.lambda);
  r.Get("gamma", c.gamma);
  r.Get("frame_rate_F", c.frame_rate_F);
}

Json ModelToJson(const model::ModelConfig& c) {
  Json j;
  j["recurrent_kind"] = std::string(model::RecurrentKindName(c.recurrent_kind));
  j["k"] = c.k;
  j["m"] = c.m;
  j["num_classes"] = c.num_classes;
  j["D_g"] = c.D_g;
  j["D_l"] = c.D_l;
  j["K"] = c.K;
  j["attention_dim"] = c.attention_dim;
  return j;
}

void ModelFromJson(const Json& j, model::ModelConfig& c) {
  ObjectReader r(j, "model");
  std::string kind(model::RecurrentKindName(c.recurrent_kind));
  r.Get("recurrent_kind", kind);
  c.recurrent_kind = ParseEnum<model::RecurrentKind>(
      kind, r.Name("recurrent_kind"),
      {{"qrnn", model::RecurrentKind::kQrnn},
       {"lstm", model::RecurrentKind::kLstm}});
  r.Get("k", c.k);
  r.Get("m", c.m);
  r.Get("num_classes", c.num_classes);
  r.Get("D_g", c.D_g);
  r.Get("D_l", c.D_l);
  r.Get("K", c.K);
  r.Get("attention_dim", c.attention_dim);
}

}  // namespace

std::string TrainConfigToJson(const train::TrainConfig& c) {
  Json j;
  j["loss"] = LossToJson(c.loss);
  j["model"] = ModelToJson(c.model);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  Json opt;
  opt["kind"] = c.optimizer.kind == train::OptimizerKind::kAdam
                    ? "adam"
                    : "sgd_momentum";
  opt["beta1"] = c.optimizer.beta1;
  opt["beta2"] = c.optimizer.beta2;
  opt["epsilon"] = c.optimizer.epsilon;
  opt["momentum"] = c.optimizer.momentum;
  j["optimizer"] = std::move(opt);
  j["seed"] = c.seed;
  j["phi_gate"] = c.phi_gate ? Json(*c.phi_gate) : Json(nullptr);
  return j.dump(2) + "\n";
}

train::TrainConfig ParseTrainConfig(std::string_view text) {
  const Json j = Parse(text);
  train::TrainConfig c;
  {
    ObjectReader r(j, "");
    if (const Json* loss = r.Object("loss")) LossFromJson(*loss, c.loss);
    if (const Json* model = r.Object("model")) ModelFromJson(*model, c.model);
    r.Get("epochs", c.epochs);
    r.Get("batch_size", c.batch_size);
    r.Get("learning_rate", c.learning_rate);
    if (const Json* opt = r.Object("optimizer")) {
      ObjectReader o(*opt, "optimizer");
      std::string kind = "adam";
      o.Get("kind", kind);
      c.optimizer.kind = ParseEnum<train::OptimizerKind>(
          kind, "optimizer.kind",
          {{"adam", train::OptimizerKind::kAdam},
           {"sgd_momentum", train::OptimizerKind::kSgdMomentum}});
      o.Get("beta1", c.optimizer.beta1);
      o.Get("beta2", c.optimizer.beta2);
      o.Get("epsilon", c.optimizer.epsilon);
      o.Get("momentum", c.optimizer.momentum);
    }
    r.Get("seed", c.seed);
    r.GetOptional("phi_gate", c.phi_gate);
  }
  train::ValidateTrainConfig(c);
  return c;
}

std::string SyntheticConfigToJson(const SyntheticConfig& c) {
  Json j;
  j["num_clips"] = c.num_clips;
  j["positive_fraction"] = c.positive_fraction;
  j["num_frames"] = c.num_frames;
  j["frame_rate_F"] = c.frame_rate_F;
  j["D_g"] = c.D_g;
  j["D_l"] = c.D_l;
  j["K"] = c.K;
  j["precursor_onset_frames"] = c.precursor_onset_frames;
  j["precursor_growth_tau"] = c.precursor_growth_tau;
  j["precursor_amplitude"] = c.precursor_amplitude;
  j["noise_sigma"] = c.noise_sigma;
  j["object_presence"] = c.object_presence;
  j["num_classes"] = c.num_classes;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

SyntheticConfig ParseSyntheticConfig(std::string_view text) {
  const Json j = Parse(text);
  SyntheticConfig c;
  {
    ObjectReader r(j, "");
    r.Get("num_clips", c.num_clips);
    r.Get("positive_fraction", c.positive_fraction);
    r.Get("num_frames", c.num_frames);
    r.Get("frame_rate_F", c.frame_rate_F);
    r.Get("D_g", c.D_g);
    r.Get("D_l", c.D_l);
    r.Get("K", c.K);
    r.Get("precursor_onset_frames", c.precursor_onset_frames);
    r.Get("precursor_growth_tau", c.precursor_growth_tau);
    r.Get("precursor_amplitude", c.precursor_amplitude);
    r.Get("noise_sigma", c.noise_sigma);
    r.Get("object_presence", c.object_presence);
    r.Get("num_classes", c.num_classes);
    r.Get("seed", c.seed);
  }
  ValidateSyntheticConfig(c);
  return c;
}

std::string ReadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("path", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace anticipate
