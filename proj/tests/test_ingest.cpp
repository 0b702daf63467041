// Copyright 2026 The Coughnet Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "coughnet/common.hpp"
#include "coughnet/ingest.hpp"

namespace coughnet {
namespace {

namespace fs = std::filesystem;

ClinicalSchema two_fields() {
  return ClinicalSchema{{{"fever", "fever"}, {"dry_cough", "dry_cough"}}};
}

TEST(Manifest, RowMapsOntoRecordFields) {
  const auto r = parse_manifest_text(
      "uuid,cough_detected,status,age,gender,fever\nu1,0.95,COVID-19,34,female,True\n", "base",
      ClinicalSchema::default_schema());
  ASSERT_EQ(r.records.size(), 1u);
  const Record& rec = r.records[0];
  EXPECT_EQ(rec.id, "u1");
  EXPECT_DOUBLE_EQ(rec.cough_certainty, 0.95);
  EXPECT_EQ(rec.status, Status::covid_positive);
  EXPECT_EQ(rec.age, 34);
  EXPECT_EQ(rec.gender, Gender::female);
  EXPECT_EQ(rec.symptoms.at("fever"), true);
  EXPECT_FALSE(rec.symptoms.contains("dry_cough"));
  EXPECT_EQ(fs::path(rec.audio_path), fs::path("base") / "u1.wav");
  EXPECT_TRUE(r.skipped.empty());
}

TEST(Manifest, HeaderOnlyIsEmpty) {
  const auto r = parse_manifest_text("uuid,cough_detected,status\n", ".", two_fields());
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.skipped.empty());
}

TEST(Manifest, MissingRequiredColumnsAreNamed) {
  try {
    parse_manifest_text("uuid,age\nx,3\n", ".", two_fields());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema);
    EXPECT_NE(std::string(e.what()).find("cough_detected status"), std::string::npos);
  }
}

TEST(Manifest, BadCertaintyIsZeroAndReported) {
  const auto r = parse_manifest_text(
      "uuid,cough_detected,status\na,oops,healthy\nb,,healthy\nc,0.5,healthy\n", ".",
      two_fields());
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].cough_certainty, 0.0);
  EXPECT_EQ(r.records[1].cough_certainty, 0.0);
  ASSERT_EQ(r.skipped.size(), 2u);
  EXPECT_EQ(r.skipped[0].line, 2u);
  EXPECT_EQ(r.skipped[0].id, "a");
  EXPECT_TRUE(filter_by_certainty(r.records, 0.9).empty());
}

TEST(Manifest, RaggedRowsAreSkipped) {
  const auto r =
      parse_manifest_text("uuid,cough_detected,status\na,0.9\nb,0.95,healthy\n", ".", two_fields());
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].id, "b");
  ASSERT_EQ(r.skipped.size(), 1u);
}

TEST(Manifest, BooleanCellSpellings) {
  const auto r = parse_manifest_text(
      "uuid,cough_detected,status,fever,dry_cough\n"
      "a,1,healthy,True,False\nb,1,healthy,1,0\nc,1,healthy,,\n",
      ".", two_fields());
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0].symptoms, (std::map<std::string, bool>{{"fever", true}, {"dry_cough", false}}));
  EXPECT_EQ(r.records[1].symptoms, r.records[0].symptoms);
  EXPECT_TRUE(r.records[2].symptoms.empty());
}

TEST(Manifest, SchemaColumnRemapping) {
  ClinicalSchema s{{{"fever", "fever_muscle_pain"}}};
  const auto r =
      parse_manifest_text("uuid,cough_detected,status,fever_muscle_pain\na,1,healthy,True\n", ".", s);
  EXPECT_TRUE(r.records[0].symptoms.at("fever"));
}

TEST(Filter, BoundaryIsInclusive) {
  Record a, b;
  a.id = "a";
  a.cough_certainty = 0.90;
  b.id = "b";
  b.cough_certainty = 0.89;
  const auto kept = filter_by_certainty({a, b}, 0.9);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "a");
}

TEST(Filter, IdempotentAndMonotone) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RecordSet rs(300);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i].id = std::to_string(i);
    rs[i].cough_certainty = std::round(u(rng) * 100.0) / 100.0;
  }
  for (double t : {0.0, 0.3, 0.5, 0.9, 1.0}) {
    const auto once = filter_by_certainty(rs, t);
    EXPECT_EQ(filter_by_certainty(once, t).size(), once.size());
    EXPECT_LE(filter_by_certainty(rs, std::min(1.0, t + 0.1)).size(), once.size());
  }
}

TEST(Label, MappingRules) {
  Record r;
  r.id = "x";
  r.status = Status::covid_positive;
  r.symptoms = {{"fever", true}};
  EXPECT_EQ(map_label(r), ClassLabel::covid_positive);
  r.status = Status::healthy;
  r.symptoms = {{"fever", false}, {"dry_cough", false}};
  EXPECT_EQ(map_label(r), ClassLabel::asymptomatic_negative);
  r.symptoms["fever"] = true;
  EXPECT_EQ(map_label(r), ClassLabel::symptomatic_negative);
  r.status = Status::symptomatic;
  r.symptoms.clear();
  EXPECT_EQ(map_label(r), ClassLabel::symptomatic_negative);
  r.status = Status::unknown;
  try {
    map_label(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unlabeled);
  }
}

TEST(Label, AssignLabelsSeparatesUnlabeled) {
  Record a, b;
  a.id = "a";
  a.status = Status::healthy;
  b.id = "b";
  b.status = Status::unknown;
  const auto r = assign_labels({a, b});
  ASSERT_EQ(r.labeled.size(), 1u);
  EXPECT_EQ(r.labeled[0].label, ClassLabel::asymptomatic_negative);
  ASSERT_EQ(r.unlabeled.size(), 1u);
  EXPECT_EQ(r.unlabeled[0].id, "b");
}

TEST(Clinical, EncodeFollowsSchemaOrder) {
  Record r;
  r.symptoms = {{"fever", true}};
  const auto v = encode_clinical(r, two_fields());
  EXPECT_EQ(v.bits, (std::vector<std::uint8_t>{1, 0}));
  EXPECT_EQ(v.schema, (std::vector<std::string>{"fever", "dry_cough"}));
  Record none;
  EXPECT_EQ(encode_clinical(none, ClinicalSchema::default_schema()).bits,
            std::vector<std::uint8_t>(8, 0));
  Record twin = r;
  twin.id = "other";
  EXPECT_EQ(encode_clinical(twin, two_fields()).bits, v.bits);
}

TEST(RecordsCsv, RoundTripKeepsEveryField) {
  const ClinicalSchema schema = ClinicalSchema::default_schema();
  Record a;
  a.id = "a";
  a.audio_path = "/x/a.wav";
  a.cough_certainty = 0.97;
  a.status = Status::symptomatic;
  a.symptoms = {{"fever", true}, {"fatigue", false}};
  a.age = 41;
  a.gender = Gender::other;
  a.split = Split::val;
  a.label = ClassLabel::symptomatic_negative;
  Record c = a;
  c.id = "a_aug0";
  c.audio_path = "/x/a_aug0.wav";
  c.parent_id = "a";
  c.age.reset();
  c.gender.reset();
  c.augmentation = AugmentSpec{AugmentKind::pitch_shift, -1.25, 123456789012345ULL};
  const fs::path path = fs::temp_directory_path() / "coughnet_records_roundtrip.csv";
  write_records_csv(path.string(), {a, c}, schema);
  const RecordSet back = read_records_csv(path.string(), schema);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const Record& want = i == 0 ? a : c;
    const Record& got = back[i];
    EXPECT_EQ(got.id, want.id);
    EXPECT_EQ(got.audio_path, want.audio_path);
    EXPECT_EQ(got.cough_certainty, want.cough_certainty);
    EXPECT_EQ(got.status, want.status);
    EXPECT_EQ(got.symptoms, want.symptoms);
    EXPECT_EQ(got.age, want.age);
    EXPECT_EQ(got.gender, want.gender);
    EXPECT_EQ(got.parent_id, want.parent_id);
    EXPECT_EQ(got.split, want.split);
    EXPECT_EQ(got.label, want.label);
    ASSERT_EQ(got.augmentation.has_value(), want.augmentation.has_value());
    if (want.augmentation) {
      EXPECT_EQ(got.augmentation->kind, want.augmentation->kind);
      EXPECT_EQ(got.augmentation->magnitude, want.augmentation->magnitude);
      EXPECT_EQ(got.augmentation->seed, want.augmentation->seed);
    }
  }
  fs::remove(path);
}

}  // namespace
}  // namespace coughnet
