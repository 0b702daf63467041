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

#include "coughnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "coughnet/csv.hpp"
#include "coughnet/nn/checkpoint.hpp"
#include "coughnet/report.hpp"
#include "json.hpp"

namespace coughnet::pipeline {
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifest = "manifest.csv";
constexpr const char* kRecords = "records.csv";
constexpr const char* kSkipReport = "skip_report.csv";
constexpr const char* kSplits = "splits.csv";
constexpr const char* kBalanced = "balanced.csv";
constexpr const char* kLedger = "augment_ledger.csv";
constexpr const char* kStore = "features.store";
constexpr const char* kModel = "model.ckpt";
constexpr const char* kAblation = "ablation.ckpt";
constexpr const char* kTrainReport = "train_report.csv";
constexpr const char* kAblationTrainReport = "ablation_train_report.csv";
constexpr const char* kGrid = "grid.csv";
constexpr const char* kScores = "scores_recording.csv";
constexpr const char* kChunkScores = "scores_chunk.csv";
constexpr const char* kAblationScores = "ablation_scores_recording.csv";
constexpr const char* kAblationChunkScores = "ablation_scores_chunk.csv";

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io, "cannot create " + dir.string());
}

void require_file(const std::string& path, const char* stage) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::not_found, path + " not found; run `" + stage + "` first");
  }
}

// Records the provenance of a stage's outputs.
void stamp(const RunConfig& config, const std::string& stage,
           const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["stage"] = stage;
  j["config_digest"] = config.digest();
  j["seed"] = config.seed;
  j["outputs"] = nlohmann::json::object();
  for (const auto& name : outputs) j["outputs"][name] = sha256_file(out_path(config, name));
  const fs::path dir = fs::path(config.out_dir) / "stamps";
  ensure_dir(dir);
  std::ofstream out(dir / (stage + ".json"), std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "cannot write stamp for " + stage);
}

// Runs body(i) for i in [0, n) on `workers` threads. The exception of the
// lowest failing index is rethrown so failures do not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, int workers, F body) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string zero_pad(std::size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

// Symptoms: class1 never has any, class2 always has at least one, class3
// leans towards fever, loss of smell and fatigue.
std::map<std::string, bool> synth_symptoms(ClassLabel label, const ClinicalSchema& schema, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<std::string, bool> out;
  for (const auto& f : schema.fields) {
    double p = 0.0;
    if (label == ClassLabel::symptomatic_negative) p = 0.3;
    if (label == ClassLabel::covid_positive) {
      p = (f.name == "fever" || f.name == "loss_of_smell" || f.name == "fatigue") ? 0.5 : 0.2;
    }
    out[f.name] = unit(rng) < p;
  }
  if (label == ClassLabel::symptomatic_negative &&
      std::none_of(out.begin(), out.end(), [](const auto& kv) { return kv.second; })) {
    std::uniform_int_distribution<std::size_t> pick(0, schema.size() - 1);
    out[schema.fields[pick(rng)].name] = true;
  }
  return out;
}

std::vector<const FeatureTriple*> triples_of(const std::vector<FeatureTriple>& all, Split s) {
  std::vector<const FeatureTriple*> out;
  for (const auto& t : all) {
    if (t.split == s) out.push_back(&t);
  }
  return out;
}

Model load_model(const std::string& path) {
  return Model::from_checkpoint(nn::Checkpoint::load(path));
}

void attach_metadata(std::vector<ScoredExample>& scored, const RecordSet& records) {
  std::map<std::string, const Record*> index;
  for (const Record& r : records) index[r.id] = &r;
  for (auto& e : scored) {
    auto it = index.find(e.record_id);
    if (it == index.end()) continue;
    e.age = it->second->age;
    e.gender = it->second->gender;
  }
}

std::vector<ScoredExample> chunk_scores(Model& model, const std::vector<const FeatureTriple*>& test,
                                        std::vector<int>& chunk_indices) {
  const nn::Tensor probs = model.predict(test);
  std::vector<ScoredExample> out;
  chunk_indices.clear();
  for (std::size_t i = 0; i < test.size(); ++i) {
    ScoredExample e;
    e.record_id = test[i]->record_id;
    e.true_label = test[i]->label;
    for (int k = 0; k < kNumClasses; ++k) {
      e.probs[static_cast<std::size_t>(k)] = probs.matrix()(static_cast<nn::Index>(i), k);
    }
    out.push_back(e);
    chunk_indices.push_back(test[i]->chunk_index);
  }
  return out;
}

}  // namespace

std::string out_path(const RunConfig& config, const std::string& name) {
  return (fs::path(config.out_dir) / name).string();
}

Signal load_audio(const std::string& path, int target_rate) {
  Signal s = read_wav(path);
  if (s.sample_rate == target_rate) return s;
  if (s.sample_rate == 2 * target_rate) return downsample_half(s);
  return resample(s, target_rate);
}

// ---------------------------------------------------------------------------

SynthResult synth(const RunConfig& config) {
  config.validate();
  const fs::path out(config.out_dir);
  ensure_dir(out / "audio");
  SynthResult result;
  result.manifest = out_path(config, kManifest);

  std::vector<std::string> header = {"uuid", "cough_detected", "status", "age", "gender",
                                     "audio_path"};
  for (const auto& f : config.schema.fields) header.push_back(f.column);
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(config.synth.n));

  parallel_for(rows.size(), config.workers, [&](std::size_t i) {
    const ClassLabel label = class_from_index(static_cast<int>(i % kNumClasses));
    const std::string id = "synth" + zero_pad(i, 5);
    Rng rng(derive_seed(config.seed, "synth_meta", i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> age(10, 85);

    const double certainty = 0.9 + 0.1 * unit(rng);
    std::string status = "healthy";
    if (label == ClassLabel::covid_positive) status = "COVID-19";
    if (label == ClassLabel::symptomatic_negative && unit(rng) < 0.5) status = "symptomatic";
    const bool has_age = unit(rng) >= config.synth.missing_age;
    const int years = age(rng);
    const double g = unit(rng);
    const std::string gender = g < 0.48 ? "male" : g < 0.96 ? "female" : "other";
    const auto symptoms = synth_symptoms(label, config.schema, rng);

    const std::string rel = "audio/" + id + ".wav";
    write_wav((out / rel).string(),
              synth_cough(label, derive_seed(config.seed, "synth_audio", i), config.synth.audio),
              WavEncoding::pcm16);

    std::vector<std::string> row = {id, csv::number(certainty), status,
                                    has_age ? std::to_string(years) : "", gender, rel};
    for (const auto& f : config.schema.fields) row.push_back(symptoms.at(f.name) ? "True" : "False");
    rows[i] = std::move(row);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) ++result.per_class[i % kNumClasses];

  std::ofstream m(result.manifest, std::ios::binary | std::ios::trunc);
  if (!m) throw Error(ErrorKind::io, "cannot write " + result.manifest);
  csv::write_row(m, header);
  for (const auto& row : rows) csv::write_row(m, row);
  m.close();
  if (!m) throw Error(ErrorKind::io, "short write to " + result.manifest);
  stamp(config, "synth", {kManifest});
  return result;
}

IngestResult ingest(const RunConfig& config, const std::string& manifest) {
  config.validate();
  const std::string path = manifest.empty() ? out_path(config, kManifest) : manifest;
  ManifestResult parsed = parse_manifest(path, config.schema);
  const RecordSet kept = filter_by_certainty(parsed.records, config.certainty_threshold);
  LabelingResult labeled = assign_labels(kept);

  IngestResult result;
  result.parsed = parsed.records.size();
  result.kept = labeled.labeled.size();
  result.skipped_rows = parsed.skipped.size();
  result.unlabeled = labeled.unlabeled.size();
  for (const Record& r : labeled.labeled) ++result.per_class[static_cast<std::size_t>(class_index(*r.label))];

  ensure_dir(config.out_dir);
  std::vector<SkipEntry> skipped = parsed.skipped;
  skipped.insert(skipped.end(), labeled.unlabeled.begin(), labeled.unlabeled.end());
  write_records_csv(out_path(config, kRecords), labeled.labeled, config.schema);
  write_skip_report(out_path(config, kSkipReport), skipped);
  stamp(config, "ingest", {kRecords, kSkipReport});
  return result;
}

SplitResult split(const RunConfig& config) {
  config.validate();
  require_file(out_path(config, kRecords), "ingest");
  const RecordSet originals = read_records_csv(out_path(config, kRecords), config.schema);
  const SplitPlan plan = config.split_plan();
  const RecordSet assigned = split_records(originals, plan);
  BalancedSplits balanced = assemble_balanced_splits(assigned, plan, config.augment);

  const fs::path out(config.out_dir);
  ensure_dir(out / "augmented");
  std::map<std::string, const Record*> by_id;
  for (const Record& r : assigned) by_id[r.id] = &r;

  // Children grouped by parent so each parent is decoded once.
  std::vector<Record*> children;
  for (RecordSet* set : {&balanced.train, &balanced.val, &balanced.test}) {
    for (Record& r : *set) {
      if (!r.is_original()) children.push_back(&r);
    }
  }
  std::map<std::string, std::vector<Record*>> by_parent;
  for (Record* c : children) {
    c->audio_path = (out / "augmented" / (c->id + ".wav")).string();
    by_parent[*c->parent_id].push_back(c);
  }
  std::vector<std::pair<std::string, std::vector<Record*>>> jobs(by_parent.begin(), by_parent.end());
  parallel_for(jobs.size(), config.workers, [&](std::size_t j) {
    const Record& parent = *by_id.at(jobs[j].first);
    const Signal source = load_audio(parent.audio_path, config.target_rate);
    for (Record* c : jobs[j].second) {
      write_wav(c->audio_path, apply_augment(source, *c->augmentation), WavEncoding::float32);
    }
  });

  SplitResult result;
  result.children = children.size();
  const RecordSet all = balanced.all();
  for (const Record& r : all) {
    const auto s = static_cast<std::size_t>(*r.split);
    const auto k = static_cast<std::size_t>(class_index(*r.label));
    ++result.total[s][k];
    if (r.is_original()) ++result.originals[s][k];
  }
  if (!leakage_violations(all).empty()) {
    throw Error(ErrorKind::conflict, "split produced a record shared across splits");
  }

  write_records_csv(out_path(config, kBalanced), all, config.schema);
  {
    std::set<std::string> selected;
    for (const Record& r : all) selected.insert(r.id);
    std::ofstream f(out_path(config, kSplits), std::ios::binary | std::ios::trunc);
    csv::write_row(f, {"id", "class", "split", "parent_id", "selected"});
    for (const Record& r : assigned) {
      csv::write_row(f, {r.id, std::string(class_name(*r.label)), std::string(split_name(*r.split)),
                         "", selected.count(r.id) ? "1" : "0"});
    }
    for (const Record* c : children) {
      csv::write_row(f, {c->id, std::string(class_name(*c->label)),
                         std::string(split_name(*c->split)), *c->parent_id, "1"});
    }
    if (!f) throw Error(ErrorKind::io, "cannot write " + out_path(config, kSplits));
  }
  {
    std::ofstream f(out_path(config, kLedger), std::ios::binary | std::ios::trunc);
    csv::write_row(f, {"child_id", "parent_id", "kind", "magnitude", "seed", "split"});
    for (const Record* c : children) {
      csv::write_row(f, {c->id, *c->parent_id, std::string(augment_kind_name(c->augmentation->kind)),
                         csv::number(c->augmentation->magnitude),
                         std::to_string(c->augmentation->seed), std::string(split_name(*c->split))});
    }
    if (!f) throw Error(ErrorKind::io, "cannot write " + out_path(config, kLedger));
  }
  stamp(config, "split", {kSplits, kBalanced, kLedger});
  return result;
}

FeaturizeResult featurize(const RunConfig& config) {
  config.validate();
  require_file(out_path(config, kBalanced), "split");
  const RecordSet records = read_records_csv(out_path(config, kBalanced), config.schema);
  const FeatureConfig fc = config.feature_config();
  FeatureStore store;
  std::atomic<std::size_t> triples{0};
  parallel_for(records.size(), config.workers, [&](std::size_t i) {
    const Record& r = records[i];
    const Signal s = load_audio(r.audio_path, config.target_rate);
    const auto chunks = chunk(s, r.id, config.chunk_seconds, config.hop_seconds);
    for (auto& t : featurize_record(r, chunks, config.schema, fc)) {
      store.put(std::move(t));
      ++triples;
    }
  });
  store.save(out_path(config, kStore));
  stamp(config, "featurize", {kStore});
  return {records.size(), triples.load(), store.digest()};
}

TrainOutcome train(const RunConfig& config) {
  config.validate();
  require_file(out_path(config, kStore), "featurize");
  const FeatureStore store = FeatureStore::load(out_path(config, kStore));
  const std::vector<FeatureTriple> all = store.values();
  const auto train_set = triples_of(all, Split::train);
  const auto val_set = triples_of(all, Split::val);
  const TrainConfig tc = config.train_config();

  std::vector<std::string> outputs;
  ModelConfig chosen = config.model_config();
  if (!config.grid.empty()) {
    const GridResult grid = grid_search(config.grid_configs(), train_set, val_set, tc);
    write_grid_table(grid, out_path(config, kGrid));
    outputs.push_back(kGrid);
    chosen = grid.best;
  }
  TrainResult full = train(Model::build(chosen), train_set, val_set, tc);
  full.model.to_checkpoint().save(out_path(config, kModel));
  write_train_report(full.report, out_path(config, kTrainReport));
  outputs.insert(outputs.end(), {kModel, kTrainReport});

  TrainOutcome outcome;
  outcome.checkpoint_digest = full.report.checkpoint_digest;
  outcome.epochs = static_cast<int>(full.report.epochs.size());
  outcome.best_epoch = full.report.best_epoch;
  outcome.best_val_micro_auc = full.report.epochs[static_cast<std::size_t>(full.report.best_epoch - 1)].val_micro_auc;

  if (config.ablation) {
    TrainResult abl = train(Model::build_ablation_resnet_only(chosen), train_set, val_set, tc);
    abl.model.to_checkpoint().save(out_path(config, kAblation));
    write_train_report(abl.report, out_path(config, kAblationTrainReport));
    outputs.insert(outputs.end(), {kAblation, kAblationTrainReport});
    outcome.ablation_digest = abl.report.checkpoint_digest;
  }
  stamp(config, "train", outputs);
  return outcome;
}

EvalOutcome evaluate(const RunConfig& config) {
  config.validate();
  require_file(out_path(config, kModel), "train");
  const FeatureStore store = FeatureStore::load(out_path(config, kStore));
  const std::vector<FeatureTriple> all = store.values();
  const auto test = triples_of(all, Split::test);
  const RecordSet records = read_records_csv(out_path(config, kBalanced), config.schema);

  std::vector<std::string> outputs;
  auto score = [&](const std::string& ckpt, const char* rec_file, const char* chunk_file) {
    Model model = load_model(out_path(config, ckpt));
    auto scored = score_recordings(model, test);
    attach_metadata(scored, records);
    std::vector<int> idx;
    auto chunks = chunk_scores(model, test, idx);
    attach_metadata(chunks, records);
    write_scores_csv(out_path(config, rec_file), scored);
    write_scores_csv(out_path(config, chunk_file), chunks, &idx);
    outputs.insert(outputs.end(), {rec_file, chunk_file});
    return std::make_pair(scored, chunks);
  };

  EvalOutcome outcome;
  const auto [scored, chunks] = score(kModel, kScores, kChunkScores);
  const ModelEvaluation ev = coughnet::evaluate(scored, config.threshold);
  outcome.recordings = scored.size();
  outcome.chunks = chunks.size();
  outcome.micro_auc = ev.micro.auc;
  outcome.macro_auc = ev.macro.auc;
  for (int k = 0; k < kNumClasses; ++k) {
    outcome.class_auc[static_cast<std::size_t>(k)] = ev.class_roc[static_cast<std::size_t>(k)].auc;
  }
  if (config.ablation && fs::exists(out_path(config, kAblation))) {
    const auto abl = score(kAblation, kAblationScores, kAblationChunkScores);
    outcome.ablation_micro_auc = micro_average_auc(abl.first);
  }
  stamp(config, "eval", outputs);
  return outcome;
}

SliceReport slice(const RunConfig& config, Slicer slicer) {
  require_file(out_path(config, kScores), "eval");
  return slice_analysis(read_scores_csv(out_path(config, kScores)), slicer, config.threshold);
}

std::pair<SliceReport, SliceReport> slice_all(const RunConfig& config) {
  config.validate();
  auto ages = slice(config, Slicer::age_bins);
  auto genders = slice(config, Slicer::gender);
  stamp(config, "slice", write_slice_tables(ages, genders, config.threshold, config.out_dir));
  return {std::move(ages), std::move(genders)};
}

std::string report(const RunConfig& config) {
  config.validate();
  require_file(out_path(config, kScores), "eval");
  ReportInputs in;
  in.threshold = config.threshold;
  in.config_digest = config.digest();
  in.seed = config.seed;
  auto load_scores = [&](const char* ckpt, const char* rec_file, const char* chunk_file) {
    ModelScores m;
    m.recordings = read_scores_csv(out_path(config, rec_file));
    m.chunks = read_scores_csv(out_path(config, chunk_file));
    m.checkpoint_digest = sha256_file(out_path(config, ckpt));
    m.parameters = static_cast<long>(load_model(out_path(config, ckpt)).parameter_count());
    return m;
  };
  in.multi_branch = load_scores(kModel, kScores, kChunkScores);
  if (config.ablation && fs::exists(out_path(config, kAblationScores))) {
    in.resnet_only = load_scores(kAblation, kAblationScores, kAblationChunkScores);
  }
  const std::string dir = out_path(config, "report");
  std::vector<std::string> outputs;
  for (const auto& f : emit_report(in, dir)) outputs.push_back("report/" + f);
  stamp(config, "report", outputs);
  return dir;
}

void run_all(const RunConfig& config) {
  synth(config);
  ingest(config);
  split(config);
  featurize(config);
  train(config);
  evaluate(config);
  slice_all(config);
  report(config);
}

Prediction predict(const RunConfig& config, const std::string& checkpoint, const std::string& wav,
                   const std::map<std::string, bool>& clinical) {
  Model model = load_model(checkpoint);
  if (static_cast<int>(config.schema.size()) != model.config().clinical_size) {
    throw Error(ErrorKind::configuration, "clinical schema length does not match the checkpoint");
  }
  const auto names = config.schema.names();
  Record r;
  r.id = fs::path(wav).stem().string();
  r.label = ClassLabel::asymptomatic_negative;
  r.split = Split::test;
  for (const auto& [name, value] : clinical) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorKind::usage, "unknown clinical field '" + name + "'");
    }
    r.symptoms[name] = value;
  }
  FeatureConfig fc = config.features;
  fc.image_size = model.config().image_size;
  const Signal s = load_audio(wav, config.target_rate);
  const auto triples = featurize_record(r, chunk(s, r.id, config.chunk_seconds, config.hop_seconds),
                                        config.schema, fc);
  std::vector<const FeatureTriple*> ptrs;
  for (const auto& t : triples) ptrs.push_back(&t);
  const RecordingPrediction p = predict_recording(model.predict(ptrs));
  Prediction out;
  out.probs = p.probs;
  out.chunks = static_cast<int>(triples.size());
  out.positive = p.positive_score >= config.threshold;
  return out;
}

}  // namespace coughnet::pipeline
