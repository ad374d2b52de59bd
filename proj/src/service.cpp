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

#include "taurus/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "taurus/artifact.hpp"
#include "taurus/error.hpp"
#include "taurus/media.hpp"
#include "taurus/video.hpp"

namespace taurus {

namespace fs = std::filesystem;
using nlohmann::json;

void ModelRegistry::add(TaskId task, LoadedModel model) {
  if (models_.count(task)) {
    fail(ErrorKind::model_load, "two artifacts for task " + std::string(to_string(task)) + ": '" +
                                    models_.at(task).source.string() + "' and '" +
                                    model.source.string() + "'");
  }
  models_.emplace(task, std::move(model));
}

const LoadedModel* ModelRegistry::find(TaskId task) const noexcept {
  auto it = models_.find(task);
  return it == models_.end() ? nullptr : &it->second;
}

std::vector<TaskId> ModelRegistry::tasks() const {
  std::vector<TaskId> out;
  for (const auto& [task, _] : models_) out.push_back(task);
  return out;
}

namespace {

LoadedModel load_one(const fs::path& dir, TaskId& task) {
  const Artifact artifact = read_artifact(dir);
  const std::string kind = artifact.meta.value("kind", "");
  LoadedModel loaded;
  loaded.source = dir;
  loaded.loaded_at = utc_timestamp();
  const LabelSpace* space = nullptr;
  if (kind == "image_head") {
    HeadModel head = head_from_artifact(artifact);
    if (is_video_task(head.task())) {
      fail(ErrorKind::model_load, dir.string() + ": image head for video task");
    }
    loaded.backbone = make_backbone(head.backbone);
    loaded.model = std::move(head);
    space = &std::get<HeadModel>(loaded.model).space;
  } else if (kind == "sequence_head") {
    SequenceHead head = sequence_head_from_artifact(artifact);
    if (!is_video_task(head.space.task())) {
      fail(ErrorKind::model_load, dir.string() + ": sequence head for image task");
    }
    loaded.backbone = make_backbone(head.frame_backbone);
    loaded.model = std::move(head);
    space = &std::get<SequenceHead>(loaded.model).space;
  } else {
    fail(ErrorKind::model_load, dir.string() + ": unknown artifact kind '" + kind + "'");
  }
  task = space->task();
  if (!(*space == canonical_label_space(task))) {
    fail(ErrorKind::model_load,
         dir.string() + ": labels do not match the " + std::string(to_string(task)) + " taxonomy");
  }
  return loaded;
}

std::string error_code_for_status(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 404: return "not_found";
    case 405: return "method_not_allowed";
    case 413: return "payload_too_large";
    case 503: return "model_unavailable";
    default: return status >= 500 ? "internal_error" : "http_" + std::to_string(status);
  }
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}, {"code", code}}.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, http_status(e.kind()), std::string(to_string(e.kind())), e.what());
}

void send_json(httplib::Response& res, const json& body) {
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

std::optional<std::string> header_case_id(const httplib::Request& req) {
  if (!req.has_header("X-Case-Id")) return std::nullopt;
  std::string v = req.get_header_value("X-Case-Id");
  if (v.empty()) return std::nullopt;
  return v;
}

// Runs a handler, mapping library errors and stray exceptions to JSON bodies.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_error(res, 400, std::string(to_string(ErrorKind::validation)), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal_error", e.what());
  }
}

class TempFile {
 public:
  explicit TempFile(const std::string& extension)
      : path_(fs::temp_directory_path() / ("taurus-upload-" + new_case_id() + extension)) {}
  ~TempFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

}  // namespace

ModelRegistry load_models(const fs::path& dir) {
  ModelRegistry registry;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    fail(ErrorKind::configuration, "model directory '" + dir.string() + "' does not exist");
  }
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind('.', 0) != 0) {
      subdirs.push_back(entry.path());
    }
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& sub : subdirs) {
    TaskId task{};
    LoadedModel m = load_one(sub, task);
    registry.add(task, std::move(m));
  }
  return registry;
}

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return 400;
    case ErrorKind::media: return 422;
    case ErrorKind::data: return 422;
    case ErrorKind::needs_manual_weighing: return 422;
    case ErrorKind::no_rule: return 404;
    case ErrorKind::not_found: return 404;
    case ErrorKind::contraindication: return 409;
    case ErrorKind::model_unavailable: return 503;
    case ErrorKind::io:
    case ErrorKind::configuration:
    case ErrorKind::model_load: return 500;
  }
  return 500;
}

Service::Service(ModelRegistry models, std::shared_ptr<CaseStore> cases, std::vector<DrugRule> drugs)
    : models_(std::move(models)), cases_(std::move(cases)), drugs_(std::move(drugs)) {}

PredictOutcome Service::handle_predict(TaskId task, std::span<const std::uint8_t> upload,
                                       const std::string& filename,
                                       const std::optional<std::string>& case_id) {
  const LoadedModel* loaded = models_.find(task);
  if (!loaded) fail(ErrorKind::model_unavailable, "no model loaded for task " + std::string(to_string(task)));
  if (case_id && !cases_->contains(*case_id)) {
    fail(ErrorKind::not_found, "unknown case " + *case_id);
  }

  Prediction prediction;
  std::string kind;
  if (const auto* head = std::get_if<HeadModel>(&loaded->model)) {
    prediction = predict_image(*head, *loaded->backbone, upload);
    kind = "image";
  } else {
    const auto& seq = std::get<SequenceHead>(loaded->model);
    std::vector<RgbImage> frames;
    if (looks_like_tar(upload)) {
      frames = load_frameset_archive(upload);
      kind = "frameset";
    } else {
      std::string ext = fs::path(filename).extension().string();
      if (ext.empty() || ext.size() > 8) ext = ".bin";
      TempFile tmp(ext);
      {
        std::ofstream out(tmp.path(), std::ios::binary);
        out.write(reinterpret_cast<const char*>(upload.data()),
                  static_cast<std::streamsize>(upload.size()));
        if (!out) fail(ErrorKind::io, "cannot spool upload");
      }
      frames = OpenCvFrameDecoder().decode(tmp.path(), kSequenceLength);
      kind = "video";
    }
    prediction = predict_video(seq, featurize_frames(frames, *loaded->backbone));
  }

  const MediaRef media = cases_->put_blob(upload, kind);
  const std::string id = cases_->record_prediction(case_id, media, prediction);
  return {std::move(prediction), id};
}

DosePlan Service::handle_dose(const std::string& disease, AgeBand age, WeightGroup weight,
                              const std::optional<std::string>& case_id) {
  if (case_id && !cases_->contains(*case_id)) {
    fail(ErrorKind::not_found, "unknown case " + *case_id);
  }
  DosePlan plan = recommend_dose(disease, age, weight, drugs_);
  if (case_id) cases_->record_dose_plan(*case_id, plan);
  return plan;
}

CaseRecord Service::get_case(const std::string& case_id) const {
  auto r = cases_->get(case_id);
  if (!r) fail(ErrorKind::not_found, "unknown case " + case_id);
  return *r;
}

void Service::mount(httplib::Server& server, const std::optional<fs::path>& ui_dir) {
  server.set_payload_max_length(kMaxVideoBytes + (1u << 20));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_error(res, res.status, error_code_for_status(res.status),
               httplib::status_message(res.status));
    return httplib::Server::HandlerResponse::Handled;
  });

  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          send_error(res, 500, "internal_error", e.what());
        } catch (...) {
          send_error(res, 500, "internal_error", "unknown error");
        }
      });

  server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    json tasks = json::array();
    for (TaskId t : models_.tasks()) tasks.push_back(to_string(t));
    send_json(res, {{"status", "ok"}, {"tasks", tasks}});
  });

  server.Get("/api/v1/labels/:task", [](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto task = task_from_slug(req.path_params.at("task"));
      if (!task) fail(ErrorKind::not_found, "unknown task '" + req.path_params.at("task") + "'");
      send_json(res, canonical_label_space(*task));
    });
  });

  server.Post("/api/v1/predict/:task", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string slug = req.path_params.at("task");
      const auto task = task_from_slug(slug);
      if (!task || slug != endpoint_slug(*task)) {
        fail(ErrorKind::not_found, "unknown task '" + slug + "'");
      }
      if (!req.has_file("file")) {
        fail(ErrorKind::validation, "multipart field 'file' is required");
      }
      const auto file = req.get_file_value("file");
      const std::size_t cap = is_video_task(*task) ? kMaxVideoBytes : kMaxImageBytes;
      if (file.content.size() > cap) {
        send_error(res, 413, "payload_too_large",
                   "upload of " + std::to_string(file.content.size()) + " bytes exceeds the " +
                       std::to_string(cap) + " byte limit");
        return;
      }
      if (!models_.find(*task)) {
        fail(ErrorKind::model_unavailable, "no model loaded for task " + std::string(to_string(*task)));
      }
      const auto* bytes = reinterpret_cast<const std::uint8_t*>(file.content.data());
      PredictOutcome out = handle_predict(*task, {bytes, file.content.size()}, file.filename,
                                          header_case_id(req));
      json body = out.prediction;
      body["case_id"] = out.case_id;
      res.set_header("X-Case-Id", out.case_id);
      send_json(res, body);
    });
  });

  server.Post("/api/v1/dosage", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        fail(ErrorKind::validation, std::string("request body is not JSON: ") + e.what());
      }
      if (!body.is_object()) fail(ErrorKind::validation, "request body must be a JSON object");
      std::optional<std::string> case_id = header_case_id(req);
      if (body.contains("case_id") && !body.at("case_id").is_null()) {
        case_id = body.at("case_id").get<std::string>();
      }
      const DosePlan plan = handle_dose(body.at("disease").get<std::string>(),
                                        parse_age_band(body.at("age_band").get<std::string>()),
                                        parse_weight_group(body.at("weight_group").get<std::string>()),
                                        case_id);
      json out = plan;
      if (case_id) {
        out["case_id"] = *case_id;
        res.set_header("X-Case-Id", *case_id);
      }
      send_json(res, out);
    });
  });

  server.Get("/api/v1/cases/:id", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, get_case(req.path_params.at("id"))); });
  });

  if (ui_dir) {
    if (!server.set_mount_point("/ui", ui_dir->string())) {
      fail(ErrorKind::configuration, "ui directory '" + ui_dir->string() + "' does not exist");
    }
  }
}

void serve(const ServeOptions& options) {
  fs::path model_dir = options.model_dir;
  if (model_dir.empty()) {
    if (const char* env = std::getenv("TAURUS_MODEL_DIR"); env && *env) model_dir = env;
  }
  ModelRegistry models;
  if (!model_dir.empty()) models = load_models(model_dir);
  std::vector<DrugRule> drugs;
  if (options.registry) drugs = load_registry(*options.registry);

  Service service(std::move(models), std::make_shared<CaseStore>(options.case_dir), std::move(drugs));
  httplib::Server server;
  service.mount(server, options.ui_dir);
  std::cout << "taurus: serving " << service.models().size() << " model(s) on " << options.host
            << ":" << options.port << std::endl;
  if (!server.listen(options.host, options.port)) {
    fail(ErrorKind::io, "cannot listen on " + options.host + ":" + std::to_string(options.port));
  }
}

}  // namespace taurus
