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

#ifndef COUGHNET_INGEST_HPP_
#define COUGHNET_INGEST_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "coughnet/types.hpp"

namespace coughnet {

/// A clinical bit: the field name used internally and the manifest column it
/// is read from.
struct ClinicalField {
  std::string name;
  std::string column;
};

struct ClinicalSchema {
  std::vector<ClinicalField> fields;

  /// fever, dry_cough, wet_cough, respiratory_condition_history, muscle_pain,
  /// sore_throat, loss_of_smell, fatigue; each read from a same-named column.
  static ClinicalSchema default_schema();
  std::vector<std::string> names() const;
  std::size_t size() const { return fields.size(); }
};

struct ClinicalVector {
  std::vector<std::uint8_t> bits;
  std::vector<std::string> schema;
};

/// One row of the skip report.
struct SkipEntry {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct ManifestResult {
  RecordSet records;
  std::vector<SkipEntry> skipped;
};

/// Reads a COUGHVID-style manifest. Required columns: uuid, cough_detected,
/// status. Audio for record `u` is `<manifest dir>/u.wav` unless an
/// `audio_path` column supplies a (manifest-relative) path.
ManifestResult parse_manifest(const std::string& manifest_file,
                              const ClinicalSchema& schema);
ManifestResult parse_manifest_text(std::string_view text,
                                   const std::string& base_dir,
                                   const ClinicalSchema& schema);

/// Keeps records with cough_certainty >= threshold, preserving order.
RecordSet filter_by_certainty(const RecordSet& records, double threshold);

/// covid_positive -> class3; symptomatic status or any symptom bit -> class2;
/// otherwise class1. Throws Error(unlabeled) for unknown status without any
/// symptom data.
ClassLabel map_label(const Record& record);

/// Labels every record; unlabeled ones are moved into `unlabeled`.
struct LabelingResult {
  RecordSet labeled;
  std::vector<SkipEntry> unlabeled;
};
LabelingResult assign_labels(const RecordSet& records);

ClinicalVector encode_clinical(const Record& record,
                               const ClinicalSchema& schema);

void write_skip_report(const std::string& path,
                       const std::vector<SkipEntry>& skipped);

/// Normalized record table shared by the pipeline stages.
void write_records_csv(const std::string& path, const RecordSet& records,
                       const ClinicalSchema& schema);
RecordSet read_records_csv(const std::string& path,
                           const ClinicalSchema& schema);

}  // namespace coughnet

#endif  // COUGHNET_INGEST_HPP_
