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

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "support/fixtures.hpp"
#include "taurus/error.hpp"
#include "taurus/service.hpp"

#include "httplib.h"

using namespace taurus;
using fixtures::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSampleRegistry = fs::path(TAURUS_SOURCE_DIR) / "data" / "drug_registry.sample.json";

HeadModel breed_head(const Backbone& backbone) {
  const LabelSpace& space = canonical_label_space(TaskId::breed);
  std::vector<std::vector<float>> features;
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < space.size(); ++c) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto png = fixtures::class_png(c, space.size(), s);
      features.push_back(embed(backbone, preprocess(png, backbone.spec().input_size)));
      labels.push_back(c);
    }
  }
  HeadHyperParams hp;
  hp.epochs = 100;
  return train_head(features, labels, space, hp, backbone.spec());
}

ModelRegistry test_models() {
  ModelRegistry reg;
  auto image_backbone = make_backbone(default_image_backbone());
  reg.add(TaskId::breed, {breed_head(*image_backbone), image_backbone, "memory", utc_timestamp()});
  auto frame_backbone = make_backbone(default_frame_backbone());
  reg.add(TaskId::behavior_video,
          {make_sequence_head(canonical_label_space(TaskId::behavior_video), {}, 3), frame_backbone,
           "memory", utc_timestamp()});
  return reg;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(ui_.path() / "index.html") << "<html>taurus</html>";
    service_ = std::make_unique<Service>(test_models(), std::make_shared<CaseStore>(cases_.path()),
                                         load_registry(kSampleRegistry));
    service_->mount(server_, ui_.path());
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(60, 0);
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Result upload(const std::string& slug, const std::string& content,
                         const std::string& filename, const httplib::Headers& headers = {}) {
    httplib::MultipartFormDataItems items{{"file", content, filename, "application/octet-stream"}};
    return client_->Post("/api/v1/predict/" + slug, headers, items);
  }

  httplib::Result dose(const json& body, const httplib::Headers& headers = {}) {
    return client_->Post("/api/v1/dosage", headers, body.dump(), "application/json");
  }

  static void expect_error(const httplib::Result& r, int status, const std::string& code) {
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, status) << r->body;
    const json body = json::parse(r->body);
    EXPECT_TRUE(body.at("error").is_string());
    EXPECT_EQ(body.at("code"), code) << r->body;
  }

  static std::string as_string(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

  TempDir cases_{"taurus-cases"};
  TempDir ui_{"taurus-ui"};
  std::unique_ptr<Service> service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorKind::validation), 400);
  EXPECT_EQ(http_status(ErrorKind::media), 422);
  EXPECT_EQ(http_status(ErrorKind::needs_manual_weighing), 422);
  EXPECT_EQ(http_status(ErrorKind::no_rule), 404);
  EXPECT_EQ(http_status(ErrorKind::not_found), 404);
  EXPECT_EQ(http_status(ErrorKind::contraindication), 409);
  EXPECT_EQ(http_status(ErrorKind::model_unavailable), 503);
  EXPECT_EQ(http_status(ErrorKind::io), 500);
}

TEST_F(ServiceTest, Healthz) {
  auto r = client_->Get("/healthz");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json body = json::parse(r->body);
  EXPECT_EQ(body.at("status"), "ok");
  EXPECT_EQ(body.at("tasks"), json::array({"breed", "behavior_video"}));
}

TEST_F(ServiceTest, Labels) {
  auto r = client_->Get("/api/v1/labels/weight");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json body = json::parse(r->body);
  EXPECT_EQ(label_space_from_json(body), canonical_label_space(TaskId::weight_group));
  expect_error(client_->Get("/api/v1/labels/horses"), 404, "not_found");
}

TEST_F(ServiceTest, PredictImage) {
  const auto png = fixtures::class_png(2, 5, 40);
  auto r = upload("breed", as_string(png), "cow.png");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const json body = json::parse(r->body);
  EXPECT_EQ(body.at("label"), canonical_label_space(TaskId::breed)[2]);
  const std::string id = body.at("case_id");
  EXPECT_EQ(r->get_header_value("X-Case-Id"), id);
  const Prediction p = prediction_from_json(body);
  EXPECT_TRUE(p.distribution.is_normalized());

  const CaseRecord rec = service_->get_case(id);
  ASSERT_EQ(rec.media.size(), 1u);
  EXPECT_EQ(rec.media[0].digest, sha256_hex(png));
  EXPECT_TRUE(fs::exists(service_->cases().blob_path(rec.media[0].digest)));
}

TEST_F(ServiceTest, PredictErrors) {
  expect_error(upload("age", "x", "a.png"), 503, "model_unavailable");
  expect_error(upload("breed", "not an image", "a.png"), 422, "media_error");
  expect_error(upload("cattle", "x", "a.png"), 404, "not_found");
  expect_error(upload("disease_image", "x", "a.png"), 404, "not_found");
  expect_error(client_->Post("/api/v1/predict/breed", "", "application/json"), 400, "validation_error");
  expect_error(upload("breed", std::string(kMaxImageBytes + 1, 'a'), "big.png"), 413,
               "payload_too_large");
  expect_error(upload("breed", as_string(fixtures::class_png(0, 5, 1)), "a.png",
                      {{"X-Case-Id", "ffffffffffffffffffffffffffffffff"}}),
               404, "not_found");
}

TEST_F(ServiceTest, PredictFramesetVideo) {
  std::vector<RgbImage> frames;
  for (std::uint64_t i = 0; i < 4; ++i) frames.push_back(fixtures::noise_image(i, 40, 30));
  auto r = upload("disease-video", as_string(fixtures::frameset_tar(frames)), "clip.tar");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200) << r->body;
  const json body = json::parse(r->body);
  EXPECT_TRUE(canonical_label_space(TaskId::behavior_video).contains(body.at("label").get<std::string>()));
  EXPECT_EQ(service_->get_case(body.at("case_id")).media.at(0).kind, "frameset");
  expect_error(upload("disease-video", "junk", "clip.mp4"), 422, "media_error");
}

TEST_F(ServiceTest, CaseThreadingAcrossEndpoints) {
  auto first = upload("breed", as_string(fixtures::class_png(1, 5, 3)), "a.png");
  ASSERT_TRUE(first);
  ASSERT_EQ(first->status, 200);
  const std::string id = first->get_header_value("X-Case-Id");
  std::vector<RgbImage> frames{fixtures::noise_image(9, 16, 16), fixtures::noise_image(10, 16, 16)};
  auto second = upload("disease-video", as_string(fixtures::frameset_tar(frames)), "c.tar",
                       {{"X-Case-Id", id}});
  ASSERT_TRUE(second);
  ASSERT_EQ(second->status, 200) << second->body;
  EXPECT_EQ(json::parse(second->body).at("case_id"), id);

  auto plan = dose({{"disease", "Mastitis Disease"}, {"age_band", "y2"}, {"weight_group", "LB_93_177"}},
                   {{"X-Case-Id", id}});
  ASSERT_TRUE(plan);
  ASSERT_EQ(plan->status, 200) << plan->body;

  auto c = client_->Get("/api/v1/cases/" + id);
  ASSERT_TRUE(c);
  ASSERT_EQ(c->status, 200);
  const json rec = json::parse(c->body);
  EXPECT_EQ(rec.at("predictions").size(), 2u);
  EXPECT_EQ(rec.at("predictions")[0].at("task"), "breed");
  EXPECT_EQ(rec.at("predictions")[1].at("task"), "behavior_video");
  EXPECT_NEAR(rec.at("dose_plan").at("dose_mg").get<double>(), 122.47, 0.01);
  std::vector<std::string> types;
  for (const auto& t : rec.at("timeline")) types.push_back(t.at("type"));
  EXPECT_EQ(types, (std::vector<std::string>{"media", "prediction", "media", "prediction", "dose_plan"}));

  expect_error(client_->Get("/api/v1/cases/0000"), 404, "not_found");
}

TEST_F(ServiceTest, Dosage) {
  auto ok = dose({{"disease", "Mastitis Disease"}, {"age_band", "y2"}, {"weight_group", "93lbs-177lbs_Body"}});
  ASSERT_TRUE(ok);
  ASSERT_EQ(ok->status, 200) << ok->body;
  const json plan = json::parse(ok->body);
  EXPECT_NEAR(plan.at("dose_mg").get<double>(), 122.47, 0.01);
  EXPECT_FALSE(plan.contains("case_id"));

  expect_error(dose({{"disease", "Healthy Cattle"}, {"age_band", "y2"}, {"weight_group", "LB_93_177"}}),
               404, "no_rule");
  expect_error(dose({{"disease", "Lumpy Skin Disease"}, {"age_band", "under_2"}, {"weight_group", "LB_93_177"}}),
               409, "contraindication");
  expect_error(dose({{"disease", "Mastitis Disease"}, {"age_band", "y2"}, {"weight_group", "Unknown"}}),
               422, "needs_manual_weighing");
  expect_error(dose({{"disease", "Mastitis Disease"}, {"age_band", "teen"}, {"weight_group", "LB_93_177"}}),
               400, "validation_error");
  expect_error(dose({{"disease", "Mastitis Disease"}}), 400, "validation_error");
  expect_error(client_->Post("/api/v1/dosage", "{oops", "application/json"), 400, "validation_error");
  expect_error(dose({{"disease", "Mastitis Disease"}, {"age_band", "y2"}, {"weight_group", "LB_93_177"},
                     {"case_id", "abc"}}),
               404, "not_found");
}

TEST_F(ServiceTest, UnknownRouteHasJsonBody) {
  expect_error(client_->Get("/api/v1/nothing"), 404, "not_found");
}

TEST_F(ServiceTest, StaticUi) {
  auto r = client_->Get("/ui/index.html");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, "<html>taurus</html>");
}

TEST(LoadModels, ReadsArtifactDirectory) {
  TempDir tmp;
  auto backbone = make_backbone(default_image_backbone());
  save_head(breed_head(*backbone), tmp / "breed");
  save_sequence_head(make_sequence_head(canonical_label_space(TaskId::behavior_video)), tmp / "video");
  fs::create_directories(tmp / ".hidden");
  const ModelRegistry reg = load_models(tmp.path());
  EXPECT_EQ(reg.tasks(), (std::vector<TaskId>{TaskId::breed, TaskId::behavior_video}));
  EXPECT_NE(reg.find(TaskId::breed)->backbone, nullptr);
  EXPECT_EQ(reg.find(TaskId::age_group), nullptr);
}

TEST(LoadModels, Failures) {
  auto kind = [](const fs::path& p) {
    try {
      load_models(p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  TempDir tmp;
  EXPECT_EQ(kind(tmp / "absent"), ErrorKind::configuration);

  auto backbone = make_backbone(default_image_backbone());
  save_head(breed_head(*backbone), tmp / "a");
  save_head(breed_head(*backbone), tmp / "b");
  EXPECT_EQ(kind(tmp.path()), ErrorKind::model_load);

  fs::remove_all(tmp / "b");
  fs::resize_file(tmp / "a" / kWeightsBin, 10);
  EXPECT_EQ(kind(tmp.path()), ErrorKind::model_load);

  TempDir other;
  const LabelSpace odd = build_label_space(TaskId::breed, {"Jersey", "Unknown"});
  save_head(HeadModel::zeros(odd, default_image_backbone()), other / "m");
  EXPECT_EQ(kind(other.path()), ErrorKind::model_load);
}
