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

#include "coughnet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>

#include "coughnet/common.hpp"
#include "coughnet/csv.hpp"

namespace coughnet {
namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<double> parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<int> parse_int(std::string_view text) {
  const auto d = parse_double(text);
  if (!d || *d < 0 || *d > 150 || *d != static_cast<double>(static_cast<int>(*d))) {
    return std::nullopt;
  }
  return static_cast<int>(*d);
}

enum class BoolCell { absent, yes, no, invalid };

BoolCell parse_bool(std::string_view text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s.empty()) return BoolCell::absent;
  if (s == "true" || s == "1" || s == "1.0") return BoolCell::yes;
  if (s == "false" || s == "0" || s == "0.0") return BoolCell::no;
  return BoolCell::invalid;
}

std::string cell(const std::vector<std::string>& row, std::optional<std::size_t> col) {
  if (!col || *col >= row.size()) return {};
  return row[*col];
}

}  // namespace

ClinicalSchema ClinicalSchema::default_schema() {
  ClinicalSchema schema;
  for (const char* name :
       {"fever", "dry_cough", "wet_cough", "respiratory_condition_history",
        "muscle_pain", "sore_throat", "loss_of_smell", "fatigue"}) {
    schema.fields.push_back({name, name});
  }
  return schema;
}

std::vector<std::string> ClinicalSchema::names() const {
  std::vector<std::string> out;
  out.reserve(fields.size());
  for (const auto& f : fields) out.push_back(f.name);
  return out;
}

ManifestResult parse_manifest(const std::string& manifest_file,
                              const ClinicalSchema& schema) {
  std::ifstream in(manifest_file, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read manifest " + manifest_file);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto dir = std::filesystem::path(manifest_file).parent_path().string();
  return parse_manifest_text(text, dir, schema);
}

ManifestResult parse_manifest_text(std::string_view text,
                                   const std::string& base_dir,
                                   const ClinicalSchema& schema) {
  const csv::Table table = csv::parse(text);
  const auto id_col = table.column("uuid");
  const auto certainty_col = table.column("cough_detected");
  const auto status_col = table.column("status");
  std::vector<std::string> missing;
  if (!id_col) missing.push_back("uuid");
  if (!certainty_col) missing.push_back("cough_detected");
  if (!status_col) missing.push_back("status");
  if (!missing.empty()) {
    std::string msg = "manifest is missing required column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorKind::schema, msg);
  }
  const auto age_col = table.column("age");
  const auto gender_col = table.column("gender");
  const auto path_col = table.column("audio_path");
  std::vector<std::optional<std::size_t>> field_cols;
  for (const auto& f : schema.fields) field_cols.push_back(table.column(f.column));

  const std::filesystem::path base(base_dir);
  ManifestResult result;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.lines[r];
    Record rec;
    rec.id = trim(cell(row, id_col));
    if (row.size() != table.header.size()) {
      result.skipped.push_back({line, rec.id,
                                "expected " + std::to_string(table.header.size()) +
                                    " fields, found " + std::to_string(row.size())});
      continue;
    }
    if (rec.id.empty()) {
      result.skipped.push_back({line, "", "empty uuid"});
      continue;
    }
    const auto certainty = parse_double(cell(row, certainty_col));
    if (!certainty || *certainty < 0.0 || *certainty > 1.0) {
      result.skipped.push_back(
          {line, rec.id, "unparseable certainty '" + cell(row, certainty_col) +
                             "' treated as 0"});
      rec.cough_certainty = 0.0;
    } else {
      rec.cough_certainty = *certainty;
    }
    rec.status = parse_status(trim(cell(row, status_col)));
    rec.age = parse_int(cell(row, age_col));
    rec.gender = parse_gender(trim(cell(row, gender_col)));
    for (std::size_t f = 0; f < schema.fields.size(); ++f) {
      switch (parse_bool(cell(row, field_cols[f]))) {
        case BoolCell::yes: rec.symptoms[schema.fields[f].name] = true; break;
        case BoolCell::no: rec.symptoms[schema.fields[f].name] = false; break;
        case BoolCell::absent: break;
        case BoolCell::invalid:
          result.skipped.push_back({line, rec.id,
                                    "invalid value for " + schema.fields[f].column +
                                        " treated as missing"});
      }
    }
    const std::string rel = trim(cell(row, path_col));
    rec.audio_path = (base / (rel.empty() ? rec.id + ".wav" : rel)).string();
    result.records.push_back(std::move(rec));
  }
  return result;
}

RecordSet filter_by_certainty(const RecordSet& records, double threshold) {
  RecordSet out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const Record& r) { return r.cough_certainty >= threshold; });
  return out;
}

ClassLabel map_label(const Record& record) {
  if (record.status == Status::covid_positive) return ClassLabel::covid_positive;
  if (record.status == Status::symptomatic) return ClassLabel::symptomatic_negative;
  if (record.status == Status::unknown && record.symptoms.empty()) {
    throw Error(ErrorKind::unlabeled,
                "record " + record.id + " has unknown status and no symptom data");
  }
  const bool any_symptom = std::any_of(record.symptoms.begin(), record.symptoms.end(),
                                       [](const auto& kv) { return kv.second; });
  return any_symptom ? ClassLabel::symptomatic_negative
                     : ClassLabel::asymptomatic_negative;
}

LabelingResult assign_labels(const RecordSet& records) {
  LabelingResult result;
  for (const Record& r : records) {
    try {
      Record labeled = r;
      labeled.label = map_label(r);
      result.labeled.push_back(std::move(labeled));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::unlabeled) throw;
      result.unlabeled.push_back({0, r.id, e.what()});
    }
  }
  return result;
}

ClinicalVector encode_clinical(const Record& record, const ClinicalSchema& schema) {
  ClinicalVector v;
  v.schema = schema.names();
  v.bits.reserve(schema.size());
  for (const auto& f : schema.fields) {
    const auto it = record.symptoms.find(f.name);
    v.bits.push_back(it != record.symptoms.end() && it->second ? 1 : 0);
  }
  return v;
}

void write_skip_report(const std::string& path, const std::vector<SkipEntry>& skipped) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  csv::write_row(out, {"line", "id", "reason"});
  for (const auto& s : skipped) {
    csv::write_row(out, {std::to_string(s.line), s.id, s.reason});
  }
}

namespace {

const std::vector<std::string> kRecordColumns = {
    "id",     "audio_path", "cough_certainty", "status",   "age",
    "gender", "label",      "parent_id",       "split",    "aug_kind",
    "aug_magnitude", "aug_seed"};

}  // namespace

void write_records_csv(const std::string& path, const RecordSet& records,
                       const ClinicalSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  std::vector<std::string> header = kRecordColumns;
  for (const auto& f : schema.fields) header.push_back(f.name);
  csv::write_row(out, header);
  for (const Record& r : records) {
    std::vector<std::string> row = {
        r.id,
        r.audio_path,
        csv::number(r.cough_certainty),
        std::string(status_name(r.status)),
        r.age ? std::to_string(*r.age) : "",
        r.gender ? std::string(gender_name(*r.gender)) : "",
        r.label ? std::string(class_name(*r.label)) : "",
        r.parent_id.value_or(""),
        r.split ? std::string(split_name(*r.split)) : "",
        r.augmentation ? std::string(augment_kind_name(r.augmentation->kind)) : "",
        r.augmentation ? csv::number(r.augmentation->magnitude) : "",
        r.augmentation ? std::to_string(r.augmentation->seed) : ""};
    for (const auto& f : schema.fields) {
      const auto it = r.symptoms.find(f.name);
      row.push_back(it == r.symptoms.end() ? "" : (it->second ? "1" : "0"));
    }
    csv::write_row(out, row);
  }
}

RecordSet read_records_csv(const std::string& path, const ClinicalSchema& schema) {
  const csv::Table table = csv::read_file(path);
  std::vector<std::size_t> cols;
  for (const auto& name : kRecordColumns) {
    const auto c = table.column(name);
    if (!c) throw Error(ErrorKind::schema, path + ": missing column " + name);
    cols.push_back(*c);
  }
  RecordSet records;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) {
      throw Error(ErrorKind::schema,
                  path + ": malformed row at line " + std::to_string(table.lines[i]));
    }
    auto at = [&](std::size_t k) -> const std::string& { return row[cols[k]]; };
    Record r;
    r.id = at(0);
    r.audio_path = at(1);
    r.cough_certainty = parse_double(at(2)).value_or(0.0);
    r.status = parse_status(at(3));
    r.age = parse_int(at(4));
    r.gender = parse_gender(at(5));
    if (!at(6).empty()) r.label = parse_class_name(at(6));
    if (!at(7).empty()) r.parent_id = at(7);
    if (!at(8).empty()) r.split = parse_split(at(8));
    if (!at(9).empty()) {
      AugmentSpec spec;
      spec.kind = parse_augment_kind(at(9));
      spec.magnitude = parse_double(at(10)).value_or(0.0);
      spec.seed = std::stoull(at(11));
      r.augmentation = spec;
    }
    for (const auto& f : schema.fields) {
      const auto c = table.column(f.name);
      if (!c) continue;
      const auto v = parse_bool(row[*c]);
      if (v == BoolCell::yes) r.symptoms[f.name] = true;
      if (v == BoolCell::no) r.symptoms[f.name] = false;
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace coughnet
