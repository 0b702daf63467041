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

#include "coughnet/report.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "coughnet/common.hpp"
#include "coughnet/csv.hpp"
#include "json.hpp"

namespace coughnet {
namespace {

std::string na(const std::optional<double>& v) { return v ? csv::number(*v) : "NA"; }

std::optional<double> safe(const std::function<double()>& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::undefined_metric) throw;
    return std::nullopt;
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error(ErrorKind::io, "short write to " + path.string());
}

// class1..3, micro, macro for one example list.
std::array<std::optional<double>, 5> auc_column(const std::vector<ScoredExample>& ex) {
  std::array<std::optional<double>, 5> col;
  for (ClassLabel c : kAllClasses) {
    col[static_cast<std::size_t>(class_index(c))] =
        safe([&] { return roc_auc_one_vs_all(ex, c).auc; });
  }
  col[3] = safe([&] { return micro_average_auc(ex); });
  col[4] = safe([&] { return macro_average_auc(ex); });
  return col;
}

void write_auc_table(const std::filesystem::path& path, const std::vector<ScoredExample>& full,
                     const std::vector<ScoredExample>* ablation) {
  auto out = open_out(path);
  csv::write_row(out, {"entry", "multi_branch", "resnet_only"});
  const auto a = auc_column(full);
  std::array<std::optional<double>, 5> b{};
  if (ablation) b = auc_column(*ablation);
  const char* names[5] = {"class1", "class2", "class3", "micro", "macro"};
  for (int i = 0; i < 5; ++i) csv::write_row(out, {names[i], na(a[i]), na(b[i])});
  close_out(out, path);
}

std::vector<std::string> confusion_fields(const ConfusionMetrics& m) {
  return {std::to_string(m.tp),  std::to_string(m.fp),  std::to_string(m.tn),
          std::to_string(m.fn),  na(m.sensitivity),     na(m.specificity),
          na(m.ppv),             na(m.npv),             csv::number(m.prevalence)};
}

const std::vector<std::string> kConfusionHeader = {
    "tp", "fp", "tn", "fn", "sensitivity", "specificity", "ppv", "npv", "prevalence"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string svg_path(const std::vector<RocPoint>& pts, double x0, double y0, double size) {
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d += (i == 0 ? "M" : " L") + fmt(x0 + pts[i].fpr * size) + "," +
         fmt(y0 + size - pts[i].tpr * size);
  }
  return d;
}

}  // namespace

std::vector<std::string> write_slice_tables(const SliceReport& ages, const SliceReport& genders,
                                            double threshold, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  {
    const fs::path path = dir / "slices_auc.csv";
    auto out = open_out(path);
    csv::write_row(out, {"slicer", "group", "count", "class1", "class2", "class3", "micro"});
    for (const SliceReport* r : {&ages, &genders}) {
      const std::string slicer = r->slicer == Slicer::age_bins ? "age" : "gender";
      for (const auto& g : r->groups) {
        csv::write_row(out, {slicer, g.name, std::to_string(g.count), na(g.class_auc[0]),
                             na(g.class_auc[1]), na(g.class_auc[2]), na(g.micro_auc)});
      }
      csv::write_row(out, {slicer, "excluded", std::to_string(r->excluded), "NA", "NA", "NA", "NA"});
    }
    close_out(out, path);
  }
  {
    const fs::path path = dir / "slices_threshold.csv";
    auto out = open_out(path);
    std::vector<std::string> header = {"slicer", "group", "count", "class", "threshold"};
    header.insert(header.end(), kConfusionHeader.begin(), kConfusionHeader.end());
    csv::write_row(out, header);
    for (const SliceReport* r : {&ages, &genders}) {
      const std::string slicer = r->slicer == Slicer::age_bins ? "age" : "gender";
      for (const auto& g : r->groups) {
        std::vector<std::string> row = {slicer, g.name, std::to_string(g.count), "class3",
                                        csv::number(threshold)};
        const auto f = confusion_fields(g.positive_class);
        row.insert(row.end(), f.begin(), f.end());
        csv::write_row(out, row);
      }
    }
    close_out(out, path);
  }
  return {"slices_auc.csv", "slices_threshold.csv"};
}

std::string roc_svg(const ModelEvaluation& ev) {
  constexpr double x0 = 60, y0 = 30, size = 360;
  struct Curve {
    const RocCurve* roc;
    const char* label;
    const char* color;
    const char* dash;
  };
  const Curve curves[5] = {{&ev.class_roc[0], "class1", "#1f77b4", ""},
                           {&ev.class_roc[1], "class2", "#ff7f0e", ""},
                           {&ev.class_roc[2], "class3", "#2ca02c", ""},
                           {&ev.micro, "micro-average", "#d62728", " stroke-dasharray=\"6,3\""},
                           {&ev.macro, "macro-average", "#9467bd", " stroke-dasharray=\"2,3\""}};
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" "
       "viewBox=\"0 0 640 440\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"440\" fill=\"white\"/>\n"
    << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << size << "\" height=\"" << size
    << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<line x1=\"" << x0 << "\" y1=\"" << y0 + size << "\" x2=\"" << x0 + size << "\" y2=\""
    << y0 << "\" stroke=\"#999999\" stroke-dasharray=\"4,4\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    s << "<text x=\"" << fmt(x0 + v * size) << "\" y=\"" << y0 + size + 16
      << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(v) << "</text>\n"
      << "<text x=\"" << x0 - 6 << "\" y=\"" << fmt(y0 + size - v * size + 4)
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  s << "<text x=\"" << x0 + size / 2 << "\" y=\"" << y0 + size + 34
    << "\" font-size=\"12\" text-anchor=\"middle\">False positive rate</text>\n"
    << "<text x=\"16\" y=\"" << y0 + size / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
    << "transform=\"rotate(-90 16 " << y0 + size / 2 << ")\">True positive rate</text>\n";
  for (int i = 0; i < 5; ++i) {
    const Curve& c = curves[i];
    s << "<path d=\"" << svg_path(c.roc->points, x0, y0, size) << "\" fill=\"none\" stroke=\""
      << c.color << "\" stroke-width=\"2\"" << c.dash << "/>\n";
    const double ly = y0 + 14 + i * 18;
    s << "<line x1=\"" << x0 + size + 14 << "\" y1=\"" << ly << "\" x2=\"" << x0 + size + 34
      << "\" y2=\"" << ly << "\" stroke=\"" << c.color << "\" stroke-width=\"2\"" << c.dash
      << "/>\n"
      << "<text x=\"" << x0 + size + 40 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">"
      << c.label << " (AUC " << fmt(c.roc->auc) << ")</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<std::string> emit_report(const ReportInputs& in, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::array<int, kNumClasses> present{};
  for (const auto& e : in.multi_branch.recordings) ++present[class_index(e.true_label)];
  for (ClassLabel c : kAllClasses) {
    if (present[class_index(c)] == 0) {
      throw Error(ErrorKind::undefined_metric,
                  "test recordings contain no " + std::string(class_name(c)) + "; ROC is undefined");
    }
  }
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io, "cannot create " + out_dir);

  const auto& full = in.multi_branch;
  const auto* abl = in.resnet_only ? &*in.resnet_only : nullptr;
  write_auc_table(dir / "auc_table.csv", full.recordings, abl ? &abl->recordings : nullptr);
  write_auc_table(dir / "auc_table_chunks.csv", full.chunks, abl ? &abl->chunks : nullptr);

  {
    const fs::path path = dir / "threshold_table.csv";
    auto out = open_out(path);
    std::vector<std::string> header = {"model", "class", "threshold"};
    header.insert(header.end(), kConfusionHeader.begin(), kConfusionHeader.end());
    csv::write_row(out, header);
    auto rows = [&](const char* model, const std::vector<ScoredExample>& ex) {
      for (ClassLabel c : kAllClasses) {
        std::vector<std::string> row = {model, std::string(class_name(c)),
                                        csv::number(in.threshold)};
        const auto f = confusion_fields(threshold_metrics(ex, c, in.threshold));
        row.insert(row.end(), f.begin(), f.end());
        csv::write_row(out, row);
      }
    };
    rows("multi_branch", full.recordings);
    if (abl) rows("resnet_only", abl->recordings);
    close_out(out, path);
  }

  const SliceReport ages = slice_analysis(full.recordings, Slicer::age_bins, in.threshold);
  const SliceReport genders = slice_analysis(full.recordings, Slicer::gender, in.threshold);
  write_slice_tables(ages, genders, in.threshold, out_dir);

  const ModelEvaluation ev = evaluate(full.recordings, in.threshold);
  {
    const fs::path path = dir / "roc.svg";
    auto out = open_out(path);
    out << roc_svg(ev);
    close_out(out, path);
  }

  nlohmann::json summary;
  summary["config_digest"] = in.config_digest;
  summary["seed"] = in.seed;
  summary["threshold"] = in.threshold;
  auto model_summary = [&](const ModelScores& m) {
    nlohmann::json j;
    j["checkpoint_digest"] = m.checkpoint_digest;
    j["parameters"] = m.parameters;
    j["test_recordings"] = m.recordings.size();
    j["test_chunks"] = m.chunks.size();
    const auto aucs = auc_column(m.recordings);
    const char* names[5] = {"class1", "class2", "class3", "micro", "macro"};
    for (int i = 0; i < 5; ++i) {
      j["auc"][names[i]] = aucs[i] ? nlohmann::json(*aucs[i]) : nlohmann::json(nullptr);
    }
    return j;
  };
  summary["multi_branch"] = model_summary(full);
  if (abl) summary["resnet_only"] = model_summary(*abl);
  {
    const fs::path path = dir / "summary.json";
    auto out = open_out(path);
    out << summary.dump(2) << '\n';
    close_out(out, path);
  }
  return {"auc_table.csv",        "auc_table_chunks.csv", "threshold_table.csv",
          "slices_auc.csv",       "slices_threshold.csv", "roc.svg",
          "summary.json"};
}

void write_scores_csv(const std::string& path, const std::vector<ScoredExample>& scores,
                      const std::vector<int>* chunk_indices) {
  if (chunk_indices && chunk_indices->size() != scores.size()) {
    throw Error(ErrorKind::parameter, "chunk index count differs from score count");
  }
  auto out = open_out(path);
  std::vector<std::string> header = {"record_id"};
  if (chunk_indices) header.push_back("chunk_index");
  for (const char* h : {"label", "p_class1", "p_class2", "p_class3", "age", "gender"}) {
    header.push_back(h);
  }
  csv::write_row(out, header);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& e = scores[i];
    std::vector<std::string> row = {e.record_id};
    if (chunk_indices) row.push_back(std::to_string((*chunk_indices)[i]));
    row.push_back(std::string(class_name(e.true_label)));
    for (double p : e.probs) row.push_back(csv::number(p));
    row.push_back(e.age ? std::to_string(*e.age) : "");
    row.push_back(e.gender ? std::string(gender_name(*e.gender)) : "");
    csv::write_row(out, row);
  }
  close_out(out, path);
}

std::vector<ScoredExample> read_scores_csv(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  std::vector<std::size_t> cols;
  for (const char* name :
       {"record_id", "label", "p_class1", "p_class2", "p_class3", "age", "gender"}) {
    const auto c = t.column(name);
    if (!c) throw Error(ErrorKind::schema, path + ": missing column " + name);
    cols.push_back(*c);
  }
  std::vector<ScoredExample> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) {
      throw Error(ErrorKind::schema, path + ": malformed row at line " + std::to_string(t.lines[i]));
    }
    ScoredExample e;
    e.record_id = row[cols[0]];
    e.true_label = parse_class_name(row[cols[1]]);
    for (int k = 0; k < 3; ++k) {
      try {
        e.probs[static_cast<std::size_t>(k)] = std::stod(row[cols[2 + k]]);
      } catch (const std::exception&) {
        throw Error(ErrorKind::schema, path + ": bad probability at line " + std::to_string(t.lines[i]));
      }
    }
    if (!row[cols[5]].empty()) e.age = std::stoi(row[cols[5]]);
    if (!row[cols[6]].empty()) e.gender = parse_gender(row[cols[6]]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace coughnet
