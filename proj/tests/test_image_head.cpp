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

#include <cmath>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "taurus/error.hpp"
#include "taurus/image_head.hpp"
#include "taurus/rng.hpp"

using namespace taurus;
using fixtures::TempDir;

namespace {

LabelSpace space_of(std::size_t n) {
  std::vector<std::string> labels{"Unknown"};
  for (std::size_t i = 1; i < n; ++i) labels.push_back("c" + std::to_string(i));
  return build_label_space(TaskId::breed, labels);
}

BackboneSpec tiny_spec(int dim) { return {"stub-tiny", 8, dim, true}; }

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

struct Blobs {
  std::vector<std::vector<float>> x;
  std::vector<std::size_t> y;
};

Blobs blobs(std::size_t classes, std::size_t per_class, int dim, double margin, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  std::vector<std::vector<double>> centers(classes, std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& c : centers)
    for (auto& v : c) v = margin * rng.normal();
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<float> p;
      for (int j = 0; j < dim; ++j) p.push_back(static_cast<float>(centers[k][static_cast<std::size_t>(j)] + 0.3 * rng.normal()));
      b.x.push_back(p);
      b.y.push_back(k);
    }
  }
  return b;
}

double accuracy(const HeadModel& h, const Blobs& b) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < b.x.size(); ++i) ok += predict_features(h, b.x[i]).index == b.y[i];
  return static_cast<double>(ok) / static_cast<double>(b.x.size());
}

}  // namespace

TEST(ImageHead, GradientMatchesFiniteDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int dim = 1 + static_cast<int>(rng.below(10));
    const std::size_t classes = 2 + rng.below(3);
    const std::size_t n = 1 + rng.below(12);
    HeadModel h = HeadModel::zeros(space_of(classes), tiny_spec(dim));
    for (Eigen::Index i = 0; i < h.weights.size(); ++i) h.weights.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < h.bias.size(); ++i) h.bias(i) = rng.normal();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = rng.below(classes);
    const double l2 = rng.uniform() * 0.1;

    const HeadLoss g = head_loss(h, x, y, l2);
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < h.weights.size(); ++i) {
      HeadModel p = h, m = h;
      p.weights.data()[i] += step;
      m.weights.data()[i] -= step;
      const double fd = (head_loss(p, x, y, l2).loss - head_loss(m, x, y, l2).loss) / (2 * step);
      ASSERT_LT(rel_err(g.grad_weights.data()[i], fd), 1e-4) << "W[" << i << "]";
    }
    for (Eigen::Index i = 0; i < h.bias.size(); ++i) {
      HeadModel p = h, m = h;
      p.bias(i) += step;
      m.bias(i) -= step;
      const double fd = (head_loss(p, x, y, l2).loss - head_loss(m, x, y, l2).loss) / (2 * step);
      ASSERT_LT(rel_err(g.grad_bias(i), fd), 1e-4) << "b[" << i << "]";
    }
  }
}

TEST(ImageHead, ZeroEpochsGivesLogC) {
  for (std::size_t c : {2u, 5u, 7u}) {
    const auto b = blobs(c, 4, 6, 2.0, c);
    const HeadModel h = train_head(b.x, b.y, space_of(c), {0.5, 0, 1e-4, 0}, tiny_spec(6));
    EXPECT_NEAR(h.training.final_loss, std::log(static_cast<double>(c)), 1e-12);
    const auto p = predict_features(h, b.x[0]);
    for (double v : p.distribution.probs) EXPECT_DOUBLE_EQ(v, 1.0 / static_cast<double>(c));
    EXPECT_EQ(p.inconclusive, c > 2);
  }
}

TEST(ImageHead, TwoSeparableBlobs) {
  const auto b = blobs(2, 20, 5, 3.0, 1);
  const HeadModel h = train_head(b.x, b.y, space_of(2), {}, tiny_spec(5));
  EXPECT_EQ(accuracy(h, b), 1.0);
  EXPECT_LT(h.training.final_loss, h.training.initial_loss);
  for (double l : h.training.loss_history) EXPECT_TRUE(std::isfinite(l));
}

TEST(ImageHead, SingleClassConfidenceGrows) {
  const auto b = blobs(1, 10, 4, 1.0, 2);
  std::vector<std::size_t> y(b.y.size(), 1);
  double prev = 0.0;
  for (int epochs : {10, 50, 400}) {
    const HeadModel h = train_head(b.x, y, space_of(3), {0.5, epochs, 0.0, 0}, tiny_spec(4));
    const double conf = predict_features(h, b.x[0]).confidence;
    EXPECT_EQ(predict_features(h, b.x[0]).index, 1u);
    EXPECT_GT(conf, prev);
    prev = conf;
  }
  EXPECT_GT(prev, 0.95);
}

TEST(ImageHead, DeterministicWeights) {
  const auto b = blobs(3, 7, 6, 2.0, 3);
  const HeadModel a = train_head(b.x, b.y, space_of(3), {0.5, 50, 1e-3, 9}, tiny_spec(6));
  const HeadModel c = train_head(b.x, b.y, space_of(3), {0.5, 50, 1e-3, 9}, tiny_spec(6));
  EXPECT_EQ(a.weights, c.weights);
  EXPECT_EQ(a.bias, c.bias);
}

TEST(ImageHead, LearningRateZeroKeepsZeros) {
  const auto b = blobs(3, 5, 4, 2.0, 4);
  const HeadModel h = train_head(b.x, b.y, space_of(3), {0.0, 30, 1e-3, 0}, tiny_spec(4));
  EXPECT_TRUE(h.weights.isZero(0));
  EXPECT_TRUE(h.bias.isZero(0));
}

TEST(ImageHead, InputErrors) {
  const auto s = space_of(2);
  try {
    train_head({}, {}, s, {}, tiny_spec(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
  try {
    train_head({{1.0f, NAN}}, {0}, s, {}, tiny_spec(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
  try {
    train_head({{1.0f, 2.0f}}, {5}, s, {}, tiny_spec(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
}

TEST(ImageHead, ZeroModelIsUniformAndInconclusive) {
  const HeadModel h = HeadModel::zeros(canonical_label_space(TaskId::breed), default_image_backbone());
  const auto bb = make_backbone(default_image_backbone());
  const auto p = predict_image(h, *bb, fixtures::class_png(0, 5, 1));
  for (double v : p.distribution.probs) EXPECT_DOUBLE_EQ(v, 0.2);
  EXPECT_TRUE(p.inconclusive);
  EXPECT_EQ(p.index, 0u);
}

TEST(ImageHead, BackboneMismatchIsConfigurationError) {
  const HeadModel h = HeadModel::zeros(canonical_label_space(TaskId::breed), default_image_backbone());
  const auto other = make_backbone({"stub-other", 224, 1280, true});
  try {
    predict_image(h, *other, fixtures::class_png(0, 5, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
}

class FiveClassFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("taurus-head");
    const auto& space = canonical_label_space(TaskId::breed);
    const auto bb = make_backbone(default_image_backbone());
    std::vector<std::vector<float>> x;
    std::vector<std::size_t> y;
    for (std::size_t k = 0; k < 5; ++k) {
      for (std::uint64_t i = 0; i < 10; ++i) {
        const auto png = fixtures::class_png(k, 5, i);
        const std::string rel = space[k] + "/" + std::to_string(i) + ".png";
        fixtures::write_bytes(dir_->path() / rel, png);
        x.push_back(embed(*bb, preprocess(png, 224)));
        y.push_back(k);
        manifest_.entries.push_back({rel, TaskId::breed, space[k], MediaKind::image});
      }
    }
    manifest_.root = dir_->path();
    manifest_.space = space;
    head_ = new HeadModel(train_head(x, y, space, {}, default_image_backbone()));
  }
  static void TearDownTestSuite() {
    delete head_;
    delete dir_;
  }
  static TempDir* dir_;
  static HeadModel* head_;
  static Manifest manifest_;
};
TempDir* FiveClassFixture::dir_ = nullptr;
HeadModel* FiveClassFixture::head_ = nullptr;
Manifest FiveClassFixture::manifest_;

TEST_F(FiveClassFixture, HeldInImagesAreConfident) {
  const auto bb = make_backbone(default_image_backbone());
  for (std::size_t k = 0; k < 5; ++k) {
    const auto p = predict_image(*head_, *bb, fixtures::class_png(k, 5, 3));
    EXPECT_EQ(p.index, k);
    EXPECT_GE(p.confidence, 0.95);
    EXPECT_NEAR(std::accumulate(p.distribution.probs.begin(), p.distribution.probs.end(), 0.0), 1.0, 1e-6);
  }
}

TEST_F(FiveClassFixture, EvaluatePerfect) {
  const auto bb = make_backbone(default_image_backbone());
  const EvalReport r = evaluate(*head_, *bb, manifest_);
  EXPECT_EQ(r.rows.size(), 50u);
  EXPECT_EQ(r.accuracy, 1.0);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t p = 0; p < 5; ++p) EXPECT_EQ(r.confusion[a][p], a == p ? 10u : 0u);
  EXPECT_EQ(r.rows[0].item, manifest_.entries[0].path);
}

TEST_F(FiveClassFixture, EvaluateConstantClassifier) {
  HeadModel constant = HeadModel::zeros(manifest_.space, default_image_backbone());
  constant.bias(3) = 5.0;
  const auto bb = make_backbone(default_image_backbone());
  const EvalReport r = evaluate(constant, *bb, manifest_);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.2);
  for (std::size_t a = 0; a < 5; ++a) EXPECT_EQ(r.confusion[a][3], 10u);
}

TEST_F(FiveClassFixture, UnreadableMediaBecomesErrorRow) {
  Manifest m = manifest_;
  fixtures::write_bytes(dir_->path() / "Unknown/broken.png", {1, 2, 3});
  m.entries.push_back({"Unknown/broken.png", TaskId::breed, "Unknown", MediaKind::image});
  m.entries.push_back({"Unknown/missing.png", TaskId::breed, "Unknown", MediaKind::image});
  const auto bb = make_backbone(default_image_backbone());
  const EvalReport r = evaluate(*head_, *bb, m);
  EXPECT_EQ(r.error_count, 2u);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_TRUE(r.rows.back().error.has_value());
  std::ostringstream csv;
  write_report_csv(r, csv);
  EXPECT_NE(csv.str().find("item,actual,predicted,confidence_percent"), std::string::npos);
  EXPECT_EQ(confusion_json(r).at("errors").size(), 2u);
}

TEST_F(FiveClassFixture, EvaluateEmptyManifest) {
  Manifest m = manifest_;
  m.entries.clear();
  const auto bb = make_backbone(default_image_backbone());
  try {
    evaluate(*head_, *bb, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
}
