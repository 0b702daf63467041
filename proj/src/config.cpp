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

#include "coughnet/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace coughnet {

using jsonutil::check_keys;
using jsonutil::json;
using jsonutil::read_if;

namespace {

json model_json(const ModelConfig& m) {
  json j = json::parse(m.to_json());
  j.erase("seed");
  return j;
}

ModelConfig model_from(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::configuration, where + " must be an object");
  if (j.contains("seed")) {
    throw Error(ErrorKind::configuration, where + ": set the seed at the top level");
  }
  try {
    return ModelConfig::from_json(j.dump());
  } catch (const Error& e) {
    throw Error(e.kind(), where + ": " + e.what());
  }
}

json range(const std::pair<double, double>& r) { return json::array({r.first, r.second}); }

void read_range(const json& j, const char* key, std::pair<double, double>& out) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read_if(j, key, v);
  if (v.size() != 2) throw Error(ErrorKind::configuration, std::string(key) + " needs [lo, hi]");
  out = {v[0], v[1]};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::configuration, what);
}

}  // namespace

std::string RunConfig::to_json() const {
  json j;
  j["out_dir"] = out_dir;
  j["seed"] = seed;
  j["workers"] = workers;
  const SynthParams& a = synth.audio;
  j["synth"] = {{"n", synth.n},
                {"missing_age", synth.missing_age},
                {"sample_rate", a.sample_rate},
                {"min_seconds", a.min_seconds},
                {"max_seconds", a.max_seconds},
                {"center_hz", a.center_hz},
                {"center_jitter", a.center_jitter},
                {"resonance_q", a.resonance_q},
                {"min_gap", a.min_gap},
                {"max_gap", a.max_gap},
                {"decay_seconds", a.decay_seconds},
                {"broadband", a.broadband},
                {"noise_floor", a.noise_floor},
                {"confusion", a.confusion},
                {"peak", a.peak}};
  json fields = json::array();
  for (const auto& f : schema.fields) fields.push_back({{"name", f.name}, {"column", f.column}});
  j["ingest"] = {{"certainty_threshold", certainty_threshold}, {"schema", fields}};
  j["audio"] = {{"target_rate", target_rate},
                {"chunk_seconds", chunk_seconds},
                {"hop_seconds", hop_seconds}};
  j["features"] = {{"n_fft", features.n_fft},     {"hop", features.hop},
                   {"n_mels", features.n_mels},   {"fmin", features.fmin},
                   {"fmax", features.fmax},       {"power_floor", features.power_floor}};
  j["augment"] = {{"snr_db", range(augment.snr_db)},
                  {"semitones", range(augment.semitones)},
                  {"shift_fraction", range(augment.shift_fraction)},
                  {"stretch_rate", range(augment.stretch_rate)}};
  j["split"] = {{"fractions", split.fractions}, {"targets", split.targets}};
  j["model"] = model_json(model);
  json g = json::array();
  for (const auto& m : grid) g.push_back(model_json(m));
  j["grid"] = g;
  j["train"] = {{"max_epochs", train.max_epochs},
                {"batch_size", train.batch_size},
                {"patience", train.patience},
                {"ablation", ablation}};
  j["eval"] = {{"threshold", threshold}};
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::configuration, std::string("run config: ") + e.what());
  }
  check_keys(j, {"out_dir", "seed", "workers", "synth", "ingest", "audio", "features", "augment",
                 "split", "model", "grid", "train", "eval"},
             "config");
  RunConfig c;
  read_if(j, "out_dir", c.out_dir);
  read_if(j, "seed", c.seed);
  read_if(j, "workers", c.workers);
  if (j.contains("synth")) {
    const json& s = j["synth"];
    check_keys(s, {"n", "missing_age", "sample_rate", "min_seconds", "max_seconds", "center_hz",
                   "center_jitter", "resonance_q", "min_gap", "max_gap", "decay_seconds",
                   "broadband", "noise_floor", "confusion", "peak"},
               "synth");
    SynthParams& a = c.synth.audio;
    read_if(s, "n", c.synth.n);
    read_if(s, "missing_age", c.synth.missing_age);
    read_if(s, "sample_rate", a.sample_rate);
    read_if(s, "min_seconds", a.min_seconds);
    read_if(s, "max_seconds", a.max_seconds);
    read_if(s, "center_hz", a.center_hz);
    read_if(s, "center_jitter", a.center_jitter);
    read_if(s, "resonance_q", a.resonance_q);
    read_if(s, "min_gap", a.min_gap);
    read_if(s, "max_gap", a.max_gap);
    read_if(s, "decay_seconds", a.decay_seconds);
    read_if(s, "broadband", a.broadband);
    read_if(s, "noise_floor", a.noise_floor);
    read_if(s, "confusion", a.confusion);
    read_if(s, "peak", a.peak);
  }
  if (j.contains("ingest")) {
    const json& s = j["ingest"];
    check_keys(s, {"certainty_threshold", "schema"}, "ingest");
    read_if(s, "certainty_threshold", c.certainty_threshold);
    if (s.contains("schema")) {
      require(s["schema"].is_array(), "ingest.schema must be a list");
      c.schema.fields.clear();
      for (const json& f : s["schema"]) {
        check_keys(f, {"name", "column"}, "ingest.schema[]");
        ClinicalField field;
        read_if(f, "name", field.name);
        field.column = field.name;
        read_if(f, "column", field.column);
        c.schema.fields.push_back(field);
      }
    }
  }
  if (j.contains("audio")) {
    const json& s = j["audio"];
    check_keys(s, {"target_rate", "chunk_seconds", "hop_seconds"}, "audio");
    read_if(s, "target_rate", c.target_rate);
    read_if(s, "chunk_seconds", c.chunk_seconds);
    read_if(s, "hop_seconds", c.hop_seconds);
  }
  if (j.contains("features")) {
    const json& s = j["features"];
    check_keys(s, {"n_fft", "hop", "n_mels", "fmin", "fmax", "power_floor"}, "features");
    read_if(s, "n_fft", c.features.n_fft);
    read_if(s, "hop", c.features.hop);
    read_if(s, "n_mels", c.features.n_mels);
    read_if(s, "fmin", c.features.fmin);
    read_if(s, "fmax", c.features.fmax);
    read_if(s, "power_floor", c.features.power_floor);
  }
  if (j.contains("augment")) {
    const json& s = j["augment"];
    check_keys(s, {"snr_db", "semitones", "shift_fraction", "stretch_rate"}, "augment");
    read_range(s, "snr_db", c.augment.snr_db);
    read_range(s, "semitones", c.augment.semitones);
    read_range(s, "shift_fraction", c.augment.shift_fraction);
    read_range(s, "stretch_rate", c.augment.stretch_rate);
  }
  if (j.contains("split")) {
    const json& s = j["split"];
    check_keys(s, {"fractions", "targets"}, "split");
    read_if(s, "fractions", c.split.fractions);
    read_if(s, "targets", c.split.targets);
  }
  if (j.contains("model")) c.model = model_from(j["model"], "model");
  if (j.contains("grid")) {
    require(j["grid"].is_array(), "grid must be a list");
    for (std::size_t i = 0; i < j["grid"].size(); ++i) {
      c.grid.push_back(model_from(j["grid"][i], "grid[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("train")) {
    const json& s = j["train"];
    check_keys(s, {"max_epochs", "batch_size", "patience", "ablation"}, "train");
    read_if(s, "max_epochs", c.train.max_epochs);
    read_if(s, "batch_size", c.train.batch_size);
    read_if(s, "patience", c.train.patience);
    read_if(s, "ablation", c.ablation);
  }
  if (j.contains("eval")) {
    check_keys(j["eval"], {"threshold"}, "eval");
    read_if(j["eval"], "threshold", c.threshold);
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return from_json(text.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string RunConfig::digest() const {
  json j = json::parse(to_json());
  j.erase("out_dir");
  j.erase("workers");
  return sha256_hex(j.dump());
}

void RunConfig::validate() const {
  require(workers >= 1, "workers must be >= 1");
  require(synth.n >= 0, "synth.n must be >= 0");
  require(synth.missing_age >= 0 && synth.missing_age <= 1, "synth.missing_age must be in [0, 1]");
  require(synth.audio.sample_rate > 0, "synth.sample_rate must be positive");
  require(synth.audio.min_seconds > 0 && synth.audio.min_seconds <= synth.audio.max_seconds,
          "synth needs 0 < min_seconds <= max_seconds");
  require(synth.audio.confusion >= 0 && synth.audio.confusion <= 1,
          "synth.confusion must be in [0, 1]");
  require(certainty_threshold >= 0 && certainty_threshold <= 1,
          "ingest.certainty_threshold must be in [0, 1]");
  require(!schema.fields.empty(), "ingest.schema must not be empty");
  for (const auto& f : schema.fields) require(!f.name.empty(), "ingest.schema names must be set");
  require(static_cast<int>(schema.size()) == model.clinical_size,
          "model.clinical_size (" + std::to_string(model.clinical_size) +
              ") must equal the clinical schema length (" + std::to_string(schema.size()) + ")");
  for (const auto& g : grid) {
    require(g.clinical_size == model.clinical_size, "grid configs must keep clinical_size");
    require(g.image_size == model.image_size, "grid configs must keep image_size");
  }
  require(target_rate > 0, "audio.target_rate must be positive");
  require(chunk_seconds > 0 && hop_seconds > 0 && hop_seconds <= chunk_seconds,
          "audio needs 0 < hop_seconds <= chunk_seconds");
  require(features.n_fft > 0 && (features.n_fft & (features.n_fft - 1)) == 0,
          "features.n_fft must be a power of two");
  require(features.hop > 0 && features.hop <= features.n_fft, "features.hop must be in (0, n_fft]");
  require(features.n_mels >= kNumMfcc, "features.n_mels must be >= 13");
  require(features.power_floor > 0, "features.power_floor must be positive");
  require(train.max_epochs >= 1 && train.batch_size >= 2 && train.patience >= 1,
          "train needs max_epochs >= 1, batch_size >= 2, patience >= 1");
  require(std::isfinite(threshold), "eval.threshold must be finite");
  try {
    split.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::configuration, e.what());
  }
  model.validate();
}

FeatureConfig RunConfig::feature_config() const {
  FeatureConfig f = features;
  f.image_size = model.image_size;
  return f;
}

SplitPlan RunConfig::split_plan() const {
  SplitPlan p = split;
  p.seed = seed;
  return p;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m = model;
  m.seed = seed;
  return m;
}

std::vector<ModelConfig> RunConfig::grid_configs() const {
  std::vector<ModelConfig> out = grid;
  for (auto& m : out) m.seed = seed;
  return out;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

void apply_environment(RunConfig& config) {
  const char* v = std::getenv(kOutDirEnv);
  if (v && *v) config.out_dir = v;
}

}  // namespace coughnet
