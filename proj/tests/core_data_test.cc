/*
 * Copyright 2026 The ModalLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "modallens/core/dataset.h"
#include "modallens/core/metrics.h"
#include "modallens/core/schema.h"
#include "tests/support/fixtures.h"

namespace modallens {
namespace {

using nlohmann::json;

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kIo;
}

TEST(Schema, PublishedFeatureSetsLoad) {
  FeatureSchema schema = LoadSchema(std::string(MODALLENS_SOURCE_DIR) +
                                    "/data/mosei_feature_schema.json");
  const FeatureSet* brow = schema.FindSet(Modality::kVision, "Brow");
  ASSERT_NE(brow, nullptr);
  EXPECT_EQ(brow->features, (std::vector<std::string>{"AU1", "AU2", "AU4"}));
  const FeatureSet* pitch = schema.FindSet(Modality::kAudio, "Pitch");
  ASSERT_NE(pitch, nullptr);
  EXPECT_EQ(pitch->features, std::vector<std::string>{"F0"});
  EXPECT_EQ(schema.dims(Modality::kAudio), 74u);
  EXPECT_EQ(schema.dims(Modality::kVision), 35u);
  EXPECT_EQ(schema.dims(Modality::kLanguage), 300u);
  // The published tag list repeats DET and INTJ.
  EXPECT_EQ(schema.pos_tagset().size(), 18u);
  EXPECT_EQ(schema.SetOf(Modality::kLanguage, 0), "Embedding");
}

TEST(Schema, FeatureInTwoSetsIsRejected) {
  json doc = testing::TinySchemaJson();
  doc["feature_sets"]["audio"]["Glottal"].push_back("F0");
  EXPECT_EQ(KindOf([&] { FeatureSchema::FromJson(doc); }), ErrorKind::kSchema);
}

TEST(Schema, StructuralViolations) {
  json unknown = testing::TinySchemaJson();
  unknown["modalities"]["smell"] = {"x"};
  EXPECT_EQ(KindOf([&] { FeatureSchema::FromJson(unknown); }), ErrorKind::kSchema);

  json empty = testing::TinySchemaJson();
  empty["modalities"]["audio"] = json::array();
  EXPECT_EQ(KindOf([&] { FeatureSchema::FromJson(empty); }), ErrorKind::kSchema);

  json duplicate = testing::TinySchemaJson();
  duplicate["modalities"]["language"].push_back("glove_0");
  EXPECT_EQ(KindOf([&] { FeatureSchema::FromJson(duplicate); }), ErrorKind::kSchema);

  json uncovered = testing::TinySchemaJson();
  uncovered["modalities"]["audio"].push_back("PSP");
  EXPECT_EQ(KindOf([&] { FeatureSchema::FromJson(uncovered); }), ErrorKind::kSchema);

  EXPECT_EQ(KindOf([] { FeatureSchema::FromJson(json::array()); }), ErrorKind::kParse);

  auto dir = testing::TempDir("schema_parse");
  testing::WriteText(dir / "bad.json", "{\"modalities\": ");
  EXPECT_EQ(KindOf([&] { LoadSchema(dir / "bad.json"); }), ErrorKind::kParse);
}

TEST(Schema, JsonRoundTripPreservesStructure) {
  FeatureSchema schema = testing::TinySchema();
  FeatureSchema again = FeatureSchema::FromJson(schema.ToJson());
  EXPECT_EQ(schema.Fingerprint(), again.Fingerprint());
  EXPECT_EQ(again.SetOf(Modality::kVision, 3), "Face emotion");
}

class InstancesTest : public ::testing::Test {
 protected:
  FeatureSchema schema_ = testing::TinySchema();

  json ValidRecord(const std::string& id, std::size_t tokens) {
    std::mt19937_64 rng(std::hash<std::string>{}(id));
    return InstanceToJson(testing::RandomInstance(rng, schema_, id, tokens));
  }
};

TEST_F(InstancesTest, ThreeValidLines) {
  auto dir = testing::TempDir("three_lines");
  std::string text;
  for (int i = 0; i < 3; ++i) text += ValidRecord("c" + std::to_string(i), 3).dump() + "\n";
  testing::WriteText(dir / "in.jsonl", text);
  Dataset dataset = LoadInstances(dir / "in.jsonl", schema_);
  EXPECT_EQ(dataset.size(), 3u);
  EXPECT_NE(dataset.Find("c1"), nullptr);
}

TEST_F(InstancesTest, RowCountMismatchNamesTheLine) {
  auto dir = testing::TempDir("shape");
  json bad = ValidRecord("bad", 5);
  bad["features"]["audio"].erase(bad["features"]["audio"].size() - 1);
  testing::WriteText(dir / "in.jsonl",
                     ValidRecord("ok", 2).dump() + "\n" + bad.dump() + "\n");
  try {
    LoadInstances(dir / "in.jsonl", schema_);
    FAIL() << "expected ShapeError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST_F(InstancesTest, LabelOutsideLikertRange) {
  json bad = ValidRecord("bad", 2);
  bad["label"] = 3.5;
  EXPECT_EQ(KindOf([&] { InstanceFromJson(bad, schema_); }), ErrorKind::kRange);
}

TEST_F(InstancesTest, LenientLoadReportsEveryFailure) {
  json wide = ValidRecord("wide", 2);
  wide["features"]["vision"][0].push_back(0.5);
  json pos = ValidRecord("pos", 2);
  pos["tokens"][0]["pos"] = "NOT_A_TAG";
  json overlap = ValidRecord("overlap", 2);
  overlap["tokens"][1]["start_s"] = 0.1;
  const std::string text = ValidRecord("a", 1).dump() + "\n" + wide.dump() + "\n\n" +
                           "{not json\n" + pos.dump() + "\n" + overlap.dump() + "\n" +
                           ValidRecord("a", 1).dump() + "\n";
  IngestResult result = ParseInstancesLenient(text, schema_);
  EXPECT_EQ(result.dataset.size(), 1u);
  ASSERT_EQ(result.failures.size(), 5u);
  EXPECT_EQ(result.failures[0].line, 2u);
  EXPECT_EQ(result.failures[0].kind, ErrorKind::kShape);
  EXPECT_EQ(result.failures[1].kind, ErrorKind::kParse);
  EXPECT_EQ(result.failures[2].kind, ErrorKind::kSchema);
  EXPECT_EQ(result.failures[3].kind, ErrorKind::kRange);
  EXPECT_EQ(result.failures[4].kind, ErrorKind::kSchema);  // duplicate id
}

TEST_F(InstancesTest, MissingPosIsAllowed) {
  json record = ValidRecord("x", 2);
  record["tokens"][0].erase("pos");
  Instance instance = InstanceFromJson(record, schema_);
  EXPECT_FALSE(instance.tokens[0].pos.has_value());
}

TEST_F(InstancesTest, SerializeThenParseIsIdentity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Dataset dataset = testing::RandomDataset(seed, schema_, 1 + seed % 7);
    IngestResult again = ParseInstancesLenient(SerializeInstances(dataset), schema_);
    ASSERT_TRUE(again.failures.empty());
    EXPECT_EQ(again.dataset, dataset);
    EXPECT_EQ(again.dataset.Fingerprint(), dataset.Fingerprint());
  }
}

TEST(Metrics, IdentityDataset) {
  const std::vector<double> y = {-2.6, -1.0, 0.0, 0.4, 1.5, 3.0};
  MetricsReport report = ComputeMetrics(y, y);
  EXPECT_EQ(report.mae, 0.0);
  EXPECT_EQ(report.acc7, 1.0);
  EXPECT_EQ(report.acc2, 1.0);
  EXPECT_EQ(report.f1, 1.0);
  ASSERT_TRUE(report.corr.has_value());
  EXPECT_NEAR(*report.corr, 1.0, 1e-12);
}

TEST(Metrics, RoundingRule) {
  EXPECT_EQ(SentimentClass(1.4), 1);
  EXPECT_EQ(SentimentClass(1.5), 2);
  EXPECT_EQ(SentimentClass(-1.5), -2);
  EXPECT_EQ(SentimentClass(-0.4), 0);
  MetricsReport report = ComputeMetrics(std::vector<double>{1.4},
                                        std::vector<double>{1.0});
  EXPECT_EQ(report.acc7, 1.0);
  EXPECT_FALSE(report.corr.has_value());
}

TEST(Metrics, ScaledPredictionsCorrelatePerfectly) {
  const std::vector<double> y = {-1.5, -0.5, 0.2, 0.7, 1.4};
  std::vector<double> pred;
  for (double v : y) pred.push_back(2.0 * v);
  EXPECT_NEAR(*ComputeMetrics(pred, y).corr, 1.0, 1e-12);
}

TEST(Metrics, ConstantSeriesHasUndefinedCorrelation) {
  const std::vector<double> y = {1.0, 1.0, 1.0};
  const std::vector<double> pred = {0.5, 1.0, 2.0};
  EXPECT_FALSE(ComputeMetrics(pred, y).corr.has_value());
  EXPECT_EQ(KindOf([&] { Pearson(pred, y); }), ErrorKind::kDegenerate);
  EXPECT_TRUE(ToJson(ComputeMetrics(pred, y))["corr"].is_null());
  EXPECT_EQ(KindOf([] { ComputeMetrics(std::vector<double>{}, std::vector<double>{}); }),
            ErrorKind::kArgument);
}

TEST(Metrics, ZeroIsTheNegativeClass) {
  // label 0 vs prediction 0.1: different polarity
  MetricsReport report = ComputeMetrics(std::vector<double>{0.1, -0.2},
                                        std::vector<double>{0.0, 0.0});
  EXPECT_EQ(report.acc2, 0.5);
  EXPECT_EQ(report.f1, 0.0);
}

TEST(Metrics, BoundsHoldOnRandomDatasets) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 17;
    std::vector<double> pred(n), label(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = value(rng);
      label[i] = value(rng);
    }
    MetricsReport r = ComputeMetrics(pred, label);
    EXPECT_GE(r.mae, 0.0);
    EXPECT_GE(r.acc7, 0.0);
    EXPECT_LE(r.acc7, 1.0);
    EXPECT_GE(r.acc2, 0.0);
    EXPECT_LE(r.acc2, 1.0);
    EXPECT_GE(r.f1, 0.0);
    EXPECT_LE(r.f1, 1.0);
    if (r.corr) {
      EXPECT_GE(*r.corr, -1.0);
      EXPECT_LE(*r.corr, 1.0);
    }

    // Nudges that stay inside each prediction's rounding cell keep acc7.
    std::vector<double> nudged(pred);
    for (double& p : nudged) {
      const double frac = std::abs(p - std::trunc(p));
      const double room = 0.5 - std::abs(frac - 0.5);
      std::uniform_real_distribution<double> eps(-0.9 * room, 0.9 * room);
      const double candidate = p + eps(rng);
      if (SentimentClass(candidate) == SentimentClass(p)) p = candidate;
    }
    EXPECT_EQ(ComputeMetrics(nudged, label).acc7, r.acc7);
  }
}

TEST(Histogram, BoundaryConvention) {
  Histogram h = BinDistribution(std::vector<double>{-3.0, 0.0, 3.0}, 3, -3.0, 3.0);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_EQ(h.underflow + h.overflow, 0u);
}

TEST(Histogram, EmptyAndRepeated) {
  Histogram empty = BinDistribution(std::vector<double>{}, 4, 0.0, 1.0);
  EXPECT_EQ(empty.counts, (std::vector<std::size_t>{0, 0, 0, 0}));
  Histogram repeated = BinDistribution(std::vector<double>(10, 0.3), 4, 0.0, 1.0);
  EXPECT_EQ(repeated.counts, (std::vector<std::size_t>{0, 10, 0, 0}));
  EXPECT_EQ(KindOf([] { BinDistribution(std::vector<double>{1.0}, 0, 0.0, 1.0); }),
            ErrorKind::kArgument);
  EXPECT_EQ(KindOf([] { BinDistribution(std::vector<double>{1.0}, 2, 1.0, 1.0); }),
            ErrorKind::kArgument);
}

TEST(Histogram, CountsAreConserved) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> values(trial);
    for (double& v : values) v = value(rng);
    Histogram h = BinDistribution(values, 1 + trial % 9, -3.0, 3.0);
    EXPECT_EQ(h.InRange() + h.underflow + h.overflow, values.size());
  }
}

}  // namespace
}  // namespace modallens
