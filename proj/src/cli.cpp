// Copyright 2026 The Taurus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taurus/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "taurus/backbone.hpp"
#include "taurus/dosage.hpp"
#include "taurus/eval_report.hpp"
#include "taurus/image_head.hpp"
#include "taurus/ingest.hpp"
#include "taurus/media.hpp"
#include "taurus/sequence_head.hpp"
#include "taurus/service.hpp"
#include "taurus/video.hpp"

namespace taurus {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::model_load:
    case ErrorKind::configuration:
    case ErrorKind::model_unavailable: return kExitModel;
    default: return kExitData;
  }
}

namespace {

struct Options {
  bool json = false;

  std::string root;
  std::string task;
  std::string kind;
  std::string out;
  double split = 0.0;
  std::uint64_t seed = 0;

  std::string manifest;
  int epochs = -1;
  double lr = -1.0;
  int batch_size = 8;
  double l2 = -1.0;

  std::string model;
  std::string report;
  std::string confusion;
  std::string input;

  std::string disease;
  std::string age_band;
  int incisors = -1;
  bool all_present = false;
  bool extreme_wear = false;
  std::string weight_group;
  std::string registry;

  ServeOptions serve;
  std::string model_dir;
  std::string ui_dir;
};

std::string sibling(const std::string& csv, const std::string& suffix) {
  fs::path p(csv);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

json counts_json(const Manifest& m) {
  json c = json::object();
  for (const auto& [label, n] : class_counts(m)) c[label] = n;
  return c;
}

void print_counts(std::ostream& out, const Manifest& m) {
  std::size_t total = 0;
  for (const auto& [label, n] : class_counts(m)) {
    out << "  " << std::left << std::setw(36) << label << n << "\n";
    total += n;
  }
  out << "  " << std::left << std::setw(36) << "Total" << total << "\n";
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const TaskId task = parse_task(o.task);
  MediaKind kind = is_video_task(task) ? MediaKind::video : MediaKind::image;
  if (!o.kind.empty()) kind = parse_media_kind(o.kind);
  const Manifest m = scan_tree(o.root, task, kind);
  save_manifest(m, o.out);

  json doc{{"manifest", o.out}, {"task", task}, {"kind", to_string(kind)},
           {"counts", counts_json(m)}, {"total", m.entries.size()}};
  if (o.split > 0.0) {
    const auto [train, test] = split(m, {o.split, o.seed});
    const std::string train_path = sibling(o.out, ".train");
    const std::string test_path = sibling(o.out, ".test");
    save_manifest(train, train_path);
    save_manifest(test, test_path);
    doc["split"] = {{"train", train_path}, {"test", test_path},
                    {"train_count", train.entries.size()}, {"test_count", test.entries.size()}};
  }

  if (o.json) {
    out << doc.dump() << "\n";
  } else {
    out << "wrote " << o.out << " (" << m.entries.size() << " " << to_string(task) << " entries)\n";
    print_counts(out, m);
    if (doc.contains("split")) {
      out << "split: " << doc["split"]["train_count"] << " train -> "
          << doc["split"]["train"].get<std::string>() << ", " << doc["split"]["test_count"]
          << " test -> " << doc["split"]["test"].get<std::string>() << "\n";
    }
  }
  return kExitOk;
}

Manifest manifest_for(const Options& o) {
  Manifest m = load_manifest(o.manifest);
  if (!o.task.empty() && parse_task(o.task) != m.task()) {
    fail(ErrorKind::validation, "manifest is for task " + std::string(to_string(m.task())) +
                                    ", not " + o.task);
  }
  if (m.entries.empty()) fail(ErrorKind::data, "manifest '" + o.manifest + "' has no entries");
  return m;
}

FeatureSequence sequence_features(const fs::path& path, const Backbone& backbone) {
  std::vector<RgbImage> frames;
  if (!fs::is_directory(path) && looks_like_tar(read_file(path))) {
    frames = load_frameset_archive(read_file(path));
  } else {
    frames = load_video_frames(path, OpenCvFrameDecoder());
  }
  return featurize_frames(frames, backbone);
}

void print_losses(std::ostream& err, const std::vector<double>& losses) {
  const std::size_t n = losses.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 10);
  for (std::size_t e = 0; e < n; ++e) {
    if (e % stride == 0 || e + 1 == n) {
      err << "epoch " << (e + 1) << "/" << n << " loss " << losses[e] << "\n";
    }
  }
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const Manifest m = manifest_for(o);
  const TaskId task = m.task();
  json summary{{"task", task}, {"out", o.out}, {"items", m.entries.size()}};

  if (!is_video_task(task)) {
    const BackboneSpec spec = default_image_backbone();
    const auto backbone = make_backbone(spec);
    std::vector<std::vector<float>> features;
    std::vector<std::size_t> labels;
    for (const auto& e : m.entries) {
      features.push_back(embed(*backbone, preprocess(read_file(m.resolve(e)), spec.input_size)));
      labels.push_back(*m.space.index_of(e.label));
    }
    HeadHyperParams hp;
    hp.seed = o.seed;
    if (o.epochs >= 0) hp.epochs = o.epochs;
    if (o.lr >= 0) hp.learning_rate = o.lr;
    if (o.l2 >= 0) hp.l2 = o.l2;
    const HeadModel head = train_head(features, labels, m.space, hp, spec);
    save_head(head, o.out);
    print_losses(err, head.training.loss_history);
    summary["initial_loss"] = head.training.initial_loss;
    summary["final_loss"] = head.training.final_loss;
  } else {
    const BackboneSpec spec = default_frame_backbone();
    const auto backbone = make_backbone(spec);
    std::vector<LabeledSequence> data;
    data.reserve(m.entries.size());
    for (const auto& e : m.entries) {
      data.push_back({sequence_features(m.resolve(e), *backbone), *m.space.index_of(e.label)});
    }
    SequenceHyperParams hp;
    hp.seed = o.seed;
    hp.batch_size = o.batch_size;
    if (o.epochs >= 0) hp.epochs = o.epochs;
    if (o.lr >= 0) hp.learning_rate = o.lr;
    const SequenceHead head = train_sequence_head(data, m.space, hp, {}, spec);
    save_sequence_head(head, o.out);
    print_losses(err, head.training.epoch_loss);
    summary["initial_loss"] = head.training.initial_loss;
    summary["final_loss"] = head.training.final_loss;
  }

  if (o.json) {
    out << summary.dump() << "\n";
  } else {
    out << "trained " << to_string(task) << " on " << m.entries.size() << " items, final loss "
        << summary["final_loss"].get<double>() << "\nwrote " << o.out << "\n";
  }
  return kExitOk;
}

// Loads either artifact kind; exactly one of the outputs is set.
struct AnyModel {
  std::optional<HeadModel> image;
  std::optional<SequenceHead> video;
  std::shared_ptr<const Backbone> backbone;

  const LabelSpace& space() const { return image ? image->space : video->space; }
};

AnyModel load_any(const std::string& dir) {
  const Artifact a = read_artifact(dir);
  AnyModel m;
  const std::string kind = a.meta.value("kind", "");
  if (kind == "image_head") {
    m.image = head_from_artifact(a);
    m.backbone = make_backbone(m.image->backbone);
  } else if (kind == "sequence_head") {
    m.video = sequence_head_from_artifact(a);
    m.backbone = make_backbone(m.video->frame_backbone);
  } else {
    fail(ErrorKind::model_load, dir + ": unknown artifact kind '" + kind + "'");
  }
  return m;
}

Prediction predict_path(const AnyModel& m, const fs::path& path) {
  if (m.image) return predict_image(*m.image, *m.backbone, read_file(path));
  return predict_video(*m.video, sequence_features(path, *m.backbone));
}

void print_prediction(std::ostream& out, const Prediction& p) {
  out << to_string(p.task) << ": " << p.label << " (" << confidence_percent(p.confidence) << "%)";
  if (p.inconclusive) out << " [inconclusive, below " << confidence_percent(p.threshold) << "%]";
  out << "\n";
  for (std::size_t i = 0; i < p.space.size(); ++i) {
    out << "  " << std::left << std::setw(36) << p.space[i]
        << confidence_percent(p.distribution.probs[i]) << "%\n";
  }
}

int cmd_eval(const Options& o, std::ostream& out) {
  const AnyModel model = load_any(o.model);
  const Manifest m = manifest_for(o);
  const EvalReport report = evaluate_manifest(m, model.space(), [&](const ManifestEntry& e) {
    return predict_path(model, m.resolve(e));
  });
  const std::string report_path = o.report.empty() ? "report.csv" : o.report;
  const std::string confusion_path =
      o.confusion.empty() ? (fs::path(report_path).replace_extension(".confusion.json")).string()
                          : o.confusion;
  {
    std::ofstream f(report_path);
    if (!f) fail(ErrorKind::io, "cannot write '" + report_path + "'");
    write_report_csv(report, f);
  }
  const json confusion = confusion_json(report);
  {
    std::ofstream f(confusion_path);
    if (!f) fail(ErrorKind::io, "cannot write '" + confusion_path + "'");
    f << confusion.dump(2) << "\n";
  }
  if (o.json) {
    json doc = confusion;
    doc["report"] = report_path;
    doc["confusion_path"] = confusion_path;
    out << doc.dump() << "\n";
  } else {
    out << "accuracy " << std::fixed << std::setprecision(4) << report.accuracy << " over "
        << (report.rows.size() - report.error_count) << " items";
    if (report.error_count) out << " (" << report.error_count << " unreadable)";
    out << "\nwrote " << report_path << " and " << confusion_path << "\n";
  }
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, bool video) {
  const AnyModel model = load_any(o.model);
  if (video != static_cast<bool>(model.video)) {
    fail(ErrorKind::model_load, o.model + " is not " + (video ? "a video" : "an image") + " model");
  }
  const Prediction p = predict_path(model, o.input);
  if (o.json) {
    out << json(p).dump() << "\n";
  } else {
    print_prediction(out, p);
  }
  return kExitOk;
}

int cmd_dose(const Options& o, std::ostream& out) {
  AgeBand band;
  if (!o.age_band.empty()) {
    band = parse_age_band(o.age_band);
  } else {
    band = age_from_dentition({o.incisors, o.all_present, o.extreme_wear}).band;
  }
  const auto registry = load_registry(o.registry);
  const DosePlan plan = recommend_dose(o.disease, band, parse_weight_group(o.weight_group), registry);
  if (o.json) {
    out << json(plan).dump() << "\n";
    return kExitOk;
  }
  out << plan.drug << " for " << plan.disease << "\n"
      << "  dose: " << std::fixed << std::setprecision(2) << plan.dose_mg << " mg per administration ("
      << plan.weight_kg_used << " kg)\n"
      << "  route: " << plan.route << "\n"
      << "  schedule: " << plan.times_per_day << "x daily for " << plan.duration_days << " days\n";
  for (const auto& w : plan.warnings) out << "  warning: " << w << "\n";
  if (!plan.notes.empty()) out << "  notes: " << plan.notes << "\n";
  return kExitOk;
}

int cmd_serve(Options o) {
  if (!o.model_dir.empty()) o.serve.model_dir = o.model_dir;
  if (!o.registry.empty()) o.serve.registry = o.registry;
  if (!o.ui_dir.empty()) o.serve.ui_dir = o.ui_dir;
  serve(o.serve);
  return kExitOk;
}

std::vector<std::string> task_names() {
  std::vector<std::string> v;
  for (TaskId t : kAllTasks) v.emplace_back(to_string(t));
  return v;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Cattle breed, disease, age and weight classification with dosage support", "taurus"};
  app.require_subcommand(1, 1);
  app.add_flag("--json", o.json, "Print one JSON document to stdout");

  const auto tasks = task_names();

  auto* ingest = app.add_subcommand("ingest", "Scan a labelled directory tree into a manifest");
  ingest->add_option("--root", o.root, "Tree whose subdirectories are labels")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--task", o.task)->required()->check(CLI::IsMember(tasks));
  ingest->add_option("--kind", o.kind, "image, video or frameset")->check(CLI::IsMember({"image", "video", "frameset"}));
  ingest->add_option("--out", o.out, "Manifest CSV")->required();
  ingest->add_option("--split", o.split, "Also write stratified train/test manifests")->check(CLI::Range(0.0, 1.0));
  ingest->add_option("--seed", o.seed);

  auto* train = app.add_subcommand("train", "Train a classifier head from a manifest");
  train->add_option("--task", o.task)->check(CLI::IsMember(tasks));
  train->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Artifact directory")->required();
  train->add_option("--seed", o.seed);
  train->add_option("--epochs", o.epochs)->check(CLI::NonNegativeNumber);
  train->add_option("--lr", o.lr)->check(CLI::NonNegativeNumber);
  train->add_option("--l2", o.l2, "Image heads only")->check(CLI::NonNegativeNumber);
  train->add_option("--batch-size", o.batch_size, "Video heads only")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Evaluate a model over a manifest");
  eval->add_option("--model", o.model)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  eval->add_option("--report", o.report, "CSV report (default report.csv)");
  eval->add_option("--confusion", o.confusion, "Confusion matrix JSON");

  auto* pimg = app.add_subcommand("predict-image", "Classify one image");
  pimg->add_option("--model", o.model)->required()->check(CLI::ExistingDirectory);
  pimg->add_option("--image,input", o.input)->required()->check(CLI::ExistingFile);

  auto* pvid = app.add_subcommand("predict-video", "Classify one video, frameset directory or frameset tar");
  pvid->add_option("--model", o.model)->required()->check(CLI::ExistingDirectory);
  pvid->add_option("--video,input", o.input)->required()->check(CLI::ExistingPath);

  auto* dose = app.add_subcommand("dose", "Recommend a dose from a drug registry");
  dose->add_option("--disease", o.disease)->required();
  auto* band_opt = dose->add_option("--age-band", o.age_band)->check(CLI::IsMember({"under_2", "y2", "y3", "y4", "y5", "over_6", "about_12"}));
  auto* incisor_opt = dose->add_option("--incisors", o.incisors, "Permanent incisor count")->check(CLI::IsMember({0, 2, 4, 6, 8, 10}));
  dose->add_flag("--all-present", o.all_present)->needs(incisor_opt);
  dose->add_flag("--extreme-wear", o.extreme_wear)->needs(incisor_opt);
  band_opt->excludes(incisor_opt);
  dose->add_option("--weight-group", o.weight_group)->required();
  dose->add_option("--registry", o.registry)->required()->check(CLI::ExistingFile);

  auto* srv = app.add_subcommand("serve", "Run the REST service");
  srv->add_option("--host", o.serve.host);
  srv->add_option("--port", o.serve.port)->check(CLI::Range(0, 65535));
  srv->add_option("--models", o.model_dir, "Model directory (default $TAURUS_MODEL_DIR)");
  srv->add_option("--cases", o.serve.case_dir, "Case store directory");
  srv->add_option("--registry", o.registry, "Drug registry JSON");
  srv->add_option("--ui", o.ui_dir, "Static files served at /ui");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (dose->parsed() && o.age_band.empty() && o.incisors < 0) {
    err << "dose: one of --age-band or --incisors is required\n";
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (train->parsed()) return cmd_train(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out);
    if (pimg->parsed()) return cmd_predict(o, out, false);
    if (pvid->parsed()) return cmd_predict(o, out, true);
    if (dose->parsed()) return cmd_dose(o, out);
    if (srv->parsed()) return cmd_serve(o);
  } catch (const Error& e) {
    if (o.json) out << json{{"error", e.what()}, {"code", to_string(e.kind())}}.dump() << "\n";
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    if (o.json) out << json{{"error", e.what()}, {"code", "internal_error"}}.dump() << "\n";
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace taurus
