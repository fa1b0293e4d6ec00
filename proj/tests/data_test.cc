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

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "anticipate/dataset.h"
#include "anticipate/dataset_io.h"
#include "anticipate/errors.h"
#include "anticipate/split.h"
#include "anticipate/synthetic.h"
#include "test_util.h"

namespace anticipate {
namespace {

using testing_util::TempDir;
using testing_util::TinySyntheticConfig;

ClipAnnotation Positive(const std::string& id, int frames, int t) {
  ClipAnnotation a;
  a.clip_id = id;
  a.label = Label::kPositive;
  a.accident_start_T = t;
  a.num_frames = frames;
  a.risk_class = RiskClass::kVehicle;
  return a;
}

TEST(AnnotationTest, PositiveNeedsAccidentFrameInRange) {
  ClipAnnotation a = Positive("a", 10, 10);
  EXPECT_NO_THROW(ValidateAnnotation(a));
  a.accident_start_T = 11;
  EXPECT_THROW(ValidateAnnotation(a), DataError);
  a.accident_start_T = 0;
  EXPECT_THROW(ValidateAnnotation(a), DataError);
  a.accident_start_T.reset();
  EXPECT_THROW(ValidateAnnotation(a), DataError);
}

TEST(AnnotationTest, NegativeMustNotCarryAccidentFrame) {
  ClipAnnotation a;
  a.clip_id = "n";
  a.num_frames = 5;
  EXPECT_NO_THROW(ValidateAnnotation(a));
  a.accident_start_T = 3;
  EXPECT_THROW(ValidateAnnotation(a), DataError);
}

TEST(AnnotationTest, ReadRejectsUnknownKeyWithLineNumber) {
  std::istringstream in(
      "{\"clip_id\":\"a\",\"label\":\"negative\",\"num_frames\":3,"
      "\"frame_rate_F\":20}\n"
      "{\"clip_id\":\"b\",\"label\":\"negative\",\"num_frames\":3,"
      "\"frame_rate_F\":20,\"colour\":1}\n");
  try {
    ReadAnnotations(in, "ann.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataError::Kind::kMalformed);
    EXPECT_EQ(e.location(), "ann.jsonl:2");
  }
}

TEST(AnnotationTest, ReadRejectsBadLabel) {
  std::istringstream in(
      "{\"clip_id\":\"a\",\"label\":\"maybe\",\"num_frames\":3,"
      "\"frame_rate_F\":20}\n");
  EXPECT_THROW(ReadAnnotations(in, "x"), DataError);
}

TEST(SyntheticTest, Deterministic) {
  const SyntheticConfig c = TinySyntheticConfig(7);
  EXPECT_EQ(GenerateSynthetic(c), GenerateSynthetic(c));
  SyntheticConfig other = c;
  other.seed = 8;
  EXPECT_NE(GenerateSynthetic(c), GenerateSynthetic(other));
}

TEST(SyntheticTest, CountsAndAnnotations) {
  SyntheticConfig c = TinySyntheticConfig();
  c.positive_fraction = 0.5;
  const Dataset d = GenerateSynthetic(c);
  ASSERT_EQ(d.size(), 24u);
  EXPECT_EQ(d.num_positives(), 12u);
  EXPECT_NO_THROW(ValidateDataset(d));
  for (const ClipAnnotation& a : d.annotations) {
    EXPECT_EQ(a.num_frames, c.num_frames);
    if (a.positive()) {
      EXPECT_EQ(*a.accident_start_T, c.num_frames);
      EXPECT_TRUE(a.risk_class.has_value());
    }
  }
}

TEST(SyntheticTest, ExtremeFractions) {
  SyntheticConfig c = TinySyntheticConfig();
  c.positive_fraction = 0.0;
  EXPECT_EQ(GenerateSynthetic(c).num_positives(), 0u);
  c.positive_fraction = 1.0;
  EXPECT_EQ(GenerateSynthetic(c).num_positives(), 24u);
}

TEST(SyntheticTest, InvalidConfigNamesField) {
  SyntheticConfig c = TinySyntheticConfig();
  c.precursor_onset_frames = c.num_frames;
  try {
    ValidateSyntheticConfig(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "precursor_onset_frames");
  }
  c = TinySyntheticConfig();
  c.positive_fraction = 1.5;
  EXPECT_THROW(ValidateSyntheticConfig(c), ConfigError);
}

TEST(SyntheticTest, NegativesHaveNoPrecursor) {
  // With zero noise negatives are exactly zero.
  SyntheticConfig c = TinySyntheticConfig();
  c.noise_sigma = 0.0;
  const Dataset d = GenerateSynthetic(c);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.annotations[i].positive()) continue;
    for (const Tensor& locals : d.features[i].local_feats) {
      for (double v : locals.data()) EXPECT_EQ(v, 0.0);
    }
  }
}

// Averaged over many seeds, the energy in a positive clip's object slots
// grows strictly over [T - onset, T].
TEST(SyntheticTest, PrecursorMagnitudeIncreases) {
  SyntheticConfig c = TinySyntheticConfig();
  c.positive_fraction = 1.0;
  c.num_clips = 4;
  c.precursor_amplitude = 3.0;
  const int frames = c.num_frames, onset = frames - c.precursor_onset_frames;
  std::vector<double> energy(frames + 1, 0.0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    c.seed = seed;
    for (const FeatureSequence& f : GenerateSynthetic(c).features) {
      for (int t = onset; t <= frames; ++t) {
        for (double v : f.local_feats[t - 1].data()) energy[t] += v * v;
      }
    }
  }
  for (int t = onset + 1; t <= frames; ++t) {
    EXPECT_GT(energy[t], energy[t - 1]) << "frame " << t;
  }
}

TEST(SyntheticTest, NoiseFreeEnvelope) {
  SyntheticConfig c = TinySyntheticConfig(3);
  c.positive_fraction = 1.0;
  c.noise_sigma = 0.0;
  const int frames = c.num_frames, onset = frames - c.precursor_onset_frames;
  const FeatureSequence f = GenerateSynthetic(c).features.front();
  for (int t = 1; t <= frames; ++t) {
    double norm2 = 0.0;
    for (double v : f.local_feats[t - 1].data()) norm2 += v * v;
    const double expected =
        t < onset ? 0.0
                  : c.precursor_amplitude *
                        std::exp(-(frames - t) / c.precursor_growth_tau);
    EXPECT_NEAR(std::sqrt(norm2), expected, 1e-12) << "frame " << t;
  }
}

TEST(DatasetIoTest, RoundTrip) {
  const Dataset d = GenerateSynthetic(TinySyntheticConfig(3));
  const auto dir = TempDir("roundtrip");
  SaveDataset(dir, d);
  EXPECT_EQ(LoadDataset(dir), d);
  EXPECT_EQ(Fingerprint(LoadDataset(dir)), Fingerprint(d));
}

TEST(DatasetIoTest, MissingFileIsDataError) {
  const auto dir = TempDir("missing");
  try {
    LoadDataset(dir);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataError::Kind::kMissingFile);
  }
}

TEST(DatasetIoTest, TruncatedFeaturesRejected) {
  const Dataset d = GenerateSynthetic(TinySyntheticConfig(3));
  std::ostringstream out(std::ios::binary);
  WriteFeatures(out, d);
  const std::string bytes = out.str();
  std::istringstream cut(bytes.substr(0, bytes.size() - 5), std::ios::binary);
  EXPECT_THROW(ReadFeatures(cut, "f"), DataError);
  std::istringstream extra(bytes + "x", std::ios::binary);
  EXPECT_THROW(ReadFeatures(extra, "f"), DataError);
  std::string bad = bytes;
  bad[0] = 'X';
  std::istringstream magic(bad, std::ios::binary);
  EXPECT_THROW(ReadFeatures(magic, "f"), DataError);
}

TEST(DatasetIoTest, MisalignedDatasetRejected) {
  Dataset d = GenerateSynthetic(TinySyntheticConfig(3));
  std::swap(d.features[0], d.features[1]);
  EXPECT_THROW(ValidateDataset(d), DataError);
}

TEST(DatasetIoTest, MetaRoundTrip) {
  const auto dir = TempDir("meta");
  DatasetMeta meta{"synthetic", 6, 2, 2, 20.0, 3};
  SaveMeta(dir, meta);
  const DatasetMeta back = LoadMeta(dir);
  EXPECT_EQ(back.name, "synthetic");
  EXPECT_EQ(back.total(), 10u);
  EXPECT_EQ(back.num_classes, 3);
}

TEST(SplitTest, StratifiedAndComplete) {
  SyntheticConfig c = TinySyntheticConfig(5);
  c.num_clips = 200;
  const Dataset d = GenerateSynthetic(c);
  const DatasetSplits s = SplitDataset(d, {0.6, 0.2, 0.2}, 11);
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), d.size());

  auto strata = [](const Dataset& part) {
    std::map<std::pair<bool, int>, int> counts;
    for (const ClipAnnotation& a : part.annotations) {
      counts[{a.positive(),
              a.risk_class ? static_cast<int>(*a.risk_class) : -1}]++;
    }
    return counts;
  };
  const auto all = strata(d);
  const auto train = strata(s.train), val = strata(s.val);
  for (const auto& [key, n] : all) {
    const int tr = train.contains(key) ? train.at(key) : 0;
    const int va = val.contains(key) ? val.at(key) : 0;
    EXPECT_LE(std::abs(tr - 0.6 * n), 1.0);
    EXPECT_LE(std::abs(va - 0.2 * n), 1.0);
  }
  // Deterministic given the seed.
  EXPECT_EQ(SplitDataset(d, {0.6, 0.2, 0.2}, 11).val, s.val);
}

TEST(SplitTest, InvalidFractions) {
  const Dataset d = GenerateSynthetic(TinySyntheticConfig());
  EXPECT_THROW(SplitDataset(d, {0.5, 0.2, 0.2}, 0), ConfigError);
  EXPECT_THROW(SplitDataset(d, {1.2, -0.2, 0.0}, 0), ConfigError);
  EXPECT_THROW(SplitDataset(Dataset{}, {0.6, 0.2, 0.2}, 0), DataError);
}

}  // namespace
}  // namespace anticipate
