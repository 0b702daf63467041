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

#include "coughnet/split_train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "coughnet/csv.hpp"
#include "coughnet/nn/loss.hpp"
#include "coughnet/nn/optim.hpp"

namespace coughnet {

void SplitPlan::validate() const {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw Error(ErrorKind::parameter, "split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::parameter, "split fractions must sum to 1");
  for (int t : targets) {
    if (t <= 0) throw Error(ErrorKind::parameter, "split targets must be positive");
  }
}

std::array<int, 3> split_counts(int n, const std::array<double, 3>& fractions) {
  std::array<int, 3> counts{};
  std::array<double, 3> remainder{};
  int assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    // The epsilon keeps 380 * 0.1 from flooring to 37.
    const double exact = n * fractions[i];
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    remainder[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  if (n >= 3) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (counts[i] == 0) {
        const auto donor = static_cast<std::size_t>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
        --counts[donor];
        ++counts[i];
      }
    }
  }
  return counts;
}

RecordSet split_records(const RecordSet& originals, const SplitPlan& plan) {
  plan.validate();
  for (const Record& r : originals) {
    if (!r.is_original()) {
      throw Error(ErrorKind::parameter, "split_records expects originals, got child " + r.id);
    }
    if (!r.label) throw Error(ErrorKind::unlabeled, "record " + r.id + " has no label");
  }
  RecordSet out = originals;
  for (ClassLabel label : kAllClasses) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (*out[i].label == label) members.push_back(i);
    }
    if (members.size() < 3) {
      throw Error(ErrorKind::cannot_split,
                  std::string(class_name(label)) + " has " + std::to_string(members.size()) +
                      " originals; at least 3 are needed");
    }
    Rng rng(derive_seed(plan.seed, "split", static_cast<std::uint64_t>(class_index(label))));
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = split_counts(static_cast<int>(members.size()), plan.fractions);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (int c = 0; c < counts[s]; ++c) out[members[pos++]].split = kAllSplits[s];
    }
  }
  return out;
}

const RecordSet& BalancedSplits::operator[](Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

RecordSet BalancedSplits::all() const {
  RecordSet out = train;
  out.insert(out.end(), val.begin(), val.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

BalancedSplits assemble_balanced_splits(const RecordSet& records, const SplitPlan& plan,
                                        const AugmentRanges& ranges) {
  plan.validate();
  std::array<RecordSet, 3> by_split;
  for (const Record& r : records) {
    if (!r.split) throw Error(ErrorKind::parameter, "record " + r.id + " has no split");
    by_split[static_cast<std::size_t>(*r.split)].push_back(r);
  }
  BalancedSplits out;
  out.train = balance_with_augmentation(by_split[0], plan.targets[0], plan.seed, ranges);
  out.val = balance_with_augmentation(by_split[1], plan.targets[1], plan.seed, ranges);
  out.test = balance_with_augmentation(by_split[2], plan.targets[2], plan.seed, ranges);
  return out;
}

std::string root_original(const Record& record, const RecordSet& all) {
  std::map<std::string, const Record*> index;
  for (const Record& r : all) index[r.id] = &r;
  const Record* cur = &record;
  for (std::size_t hops = 0; cur->parent_id; ++hops) {
    if (hops > all.size()) throw Error(ErrorKind::schema, "parent cycle at " + record.id);
    auto it = index.find(*cur->parent_id);
    if (it == index.end()) {
      // Balanced sets may drop the parent; its id is still the root.
      return *cur->parent_id;
    }
    cur = it->second;
  }
  return cur->id;
}

std::vector<std::string> leakage_violations(const RecordSet& records) {
  std::map<std::string, const Record*> index;
  for (const Record& r : records) index[r.id] = &r;
  std::map<std::string, std::set<Split>> seen;
  for (const Record& r : records) {
    if (!r.split) continue;
    const Record* cur = &r;
    std::string root = r.id;
    for (std::size_t hops = 0; cur && cur->parent_id; ++hops) {
      if (hops > records.size()) throw Error(ErrorKind::schema, "parent cycle at " + r.id);
      root = *cur->parent_id;
      auto it = index.find(root);
      cur = it == index.end() ? nullptr : it->second;
    }
    seen[root].insert(*r.split);
  }
  std::vector<std::string> out;
  for (const auto& [root, splits] : seen) {
    if (splits.size() > 1) out.push_back(root);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ScoredExample> score_recordings(Model& model,
                                            const std::vector<const FeatureTriple*>& triples) {
  const nn::Tensor probs = model.predict(triples);
  std::vector<std::string> order;
  std::map<std::string, std::vector<nn::Index>> rows;
  std::map<std::string, ClassLabel> labels;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const std::string& id = triples[i]->record_id;
    if (!rows.count(id)) order.push_back(id);
    rows[id].push_back(static_cast<nn::Index>(i));
    labels[id] = triples[i]->label;
  }
  std::vector<ScoredExample> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    const auto& r = rows[id];
    nn::Tensor chunk({static_cast<nn::Index>(r.size()), kNumClasses});
    for (std::size_t j = 0; j < r.size(); ++j) {
      chunk.matrix().row(static_cast<nn::Index>(j)) = probs.matrix().row(r[j]);
    }
    const RecordingPrediction p = predict_recording(chunk);
    ScoredExample e;
    e.record_id = id;
    e.true_label = labels[id];
    e.probs = p.probs;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

double recording_log_loss(const std::vector<ScoredExample>& scored) {
  double total = 0.0;
  for (const auto& e : scored) {
    total -= std::log(std::max(e.probs[static_cast<std::size_t>(class_index(e.true_label))], 1e-12));
  }
  return scored.empty() ? 0.0 : total / static_cast<double>(scored.size());
}

// Mini-batches over a permutation; a trailing batch of one joins the
// previous batch so batch normalization always sees at least two rows.
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += size) out.emplace_back(start, std::min(n, start + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

}  // namespace

TrainResult train(Model model, const std::vector<const FeatureTriple*>& train_set,
                  const std::vector<const FeatureTriple*>& val_set, const TrainConfig& config) {
  if (train_set.size() < 2) throw Error(ErrorKind::empty_input, "training needs at least 2 chunks");
  if (val_set.empty()) throw Error(ErrorKind::empty_input, "training needs validation chunks");
  if (config.batch_size < 2 || config.max_epochs < 1 || config.patience < 1) {
    throw Error(ErrorKind::parameter, "need batch_size >= 2, max_epochs >= 1, patience >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  model.fit_mfcc_scaling(train_set);
  nn::Adam optimizer(model.params(), {model.config().learning_rate});

  TrainRunReport report;
  report.seed = config.seed;
  report.config_digest = model.config().digest();
  double best_auc = -1.0;
  auto best = nn::capture(model.params(), model.state());
  int since_best = 0;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    const auto bounds = batch_bounds(order.size(), static_cast<std::size_t>(config.batch_size));
    for (std::size_t b = 0; b < bounds.size(); ++b) {
      std::vector<const FeatureTriple*> members;
      for (std::size_t i = bounds[b].first; i < bounds[b].second; ++i) members.push_back(train_set[order[i]]);
      const Batch batch = make_batch(members, model.config().image_size, model.config().clinical_size);
      const auto result = nn::softmax_cross_entropy(
          model.forward(batch, {nn::Mode::train, step}), batch.labels);
      if (!std::isfinite(result.loss)) {
        throw Error(ErrorKind::numerical,
                    "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(b) + " (lr=" + csv::number(model.config().learning_rate) +
                        ")");
      }
      model.backward(result.grad);
      optimizer.step();
      ++step;
      loss_sum += result.loss * static_cast<double>(members.size());
      seen += members.size();
    }

    const auto scored = score_recordings(model, val_set);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.val_loss = recording_log_loss(scored);
    stats.val_micro_auc = micro_average_auc(scored);
    report.epochs.push_back(stats);

    if (stats.val_micro_auc > best_auc) {
      best_auc = stats.val_micro_auc;
      report.best_epoch = epoch;
      best = nn::capture(model.params(), model.state());
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  nn::restore(best, model.params(), model.state());
  report.checkpoint_digest = model.digest();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

void write_train_report(const TrainRunReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  csv::write_row(out, {"epoch", "train_loss", "val_loss", "val_micro_auc", "best"});
  for (const auto& e : report.epochs) {
    csv::write_row(out, {std::to_string(e.epoch), csv::number(e.train_loss),
                         csv::number(e.val_loss), csv::number(e.val_micro_auc),
                         e.epoch == report.best_epoch ? "1" : "0"});
  }
  if (!out) throw Error(ErrorKind::io, "short write to " + path);
}

GridResult grid_search(const std::vector<ModelConfig>& grid,
                       const std::vector<const FeatureTriple*>& train_set,
                       const std::vector<const FeatureTriple*>& val_set, const TrainConfig& config) {
  if (grid.empty()) throw Error(ErrorKind::parameter, "grid search needs at least one config");
  GridResult result;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridRow row;
    row.index = static_cast<int>(i);
    row.config = grid[i];
    try {
      TrainResult t = train(Model::build(grid[i]), train_set, val_set, config);
      row.ok = true;
      row.parameters = static_cast<long>(t.model.parameter_count());
      row.epochs = static_cast<int>(t.report.epochs.size());
      for (const auto& e : t.report.epochs) {
        if (e.epoch == t.report.best_epoch) row.val_micro_auc = e.val_micro_auc;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::numerical || e.kind() == ErrorKind::configuration ||
          e.kind() == ErrorKind::shape || e.kind() == ErrorKind::parameter) {
        row.error = std::string(to_string(e.kind())) + ": " + e.what();
      } else {
        throw;
      }
    }
    result.rows.push_back(std::move(row));
  }
  for (const auto& row : result.rows) {
    if (!row.ok) continue;
    if (result.best_index < 0) {
      result.best_index = row.index;
      continue;
    }
    const GridRow& best = result.rows[static_cast<std::size_t>(result.best_index)];
    if (row.val_micro_auc > best.val_micro_auc ||
        (row.val_micro_auc == best.val_micro_auc && row.parameters < best.parameters)) {
      result.best_index = row.index;
    }
  }
  if (result.best_index < 0) throw Error(ErrorKind::configuration, "every grid config failed");
  result.best = result.rows[static_cast<std::size_t>(result.best_index)].config;
  return result;
}

void write_grid_table(const GridResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  csv::write_row(out, {"index", "status", "val_micro_auc", "parameters", "epochs", "selected",
                       "config_digest", "config", "error"});
  for (const auto& row : result.rows) {
    csv::write_row(out, {std::to_string(row.index), row.ok ? "ok" : "failed",
                         row.ok ? csv::number(row.val_micro_auc) : "NA",
                         row.ok ? std::to_string(row.parameters) : "NA",
                         std::to_string(row.epochs), row.index == result.best_index ? "1" : "0",
                         row.config.digest(), row.config.to_json(), row.error});
  }
  if (!out) throw Error(ErrorKind::io, "short write to " + path);
}

}  // namespace coughnet
