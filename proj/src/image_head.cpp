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

#include "taurus/image_head.hpp"

#include <cmath>

#include "taurus/error.hpp"
#include "taurus/media.hpp"

namespace taurus {

namespace {

// Row-wise log-softmax, max-subtracted.
Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

void check_training_inputs(const std::vector<std::vector<float>>& features,
                           const std::vector<std::size_t>& labels, const LabelSpace& space) {
  if (features.empty()) fail(ErrorKind::validation, "training set is empty");
  if (features.size() != labels.size()) {
    fail(ErrorKind::validation, "features and labels differ in length");
  }
  for (auto y : labels) {
    if (y >= space.size()) {
      fail(ErrorKind::validation, "label index " + std::to_string(y) + " is out of range");
    }
  }
}

}  // namespace

HeadModel HeadModel::zeros(const LabelSpace& space, const BackboneSpec& backbone) {
  HeadModel h;
  h.space = space;
  h.backbone = backbone;
  h.weights = Eigen::MatrixXd::Zero(backbone.feature_dim, static_cast<Eigen::Index>(space.size()));
  h.bias = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(space.size()));
  return h;
}

Eigen::MatrixXd feature_matrix(const std::vector<std::vector<float>>& features) {
  if (features.empty()) return {};
  const auto dim = features.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) fail(ErrorKind::data, "feature vectors differ in length");
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(features[i][j])) {
        fail(ErrorKind::data, "feature vector " + std::to_string(i) + " is not finite");
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
    }
  }
  return m;
}

HeadLoss head_loss(const HeadModel& head, const Eigen::MatrixXd& features,
                   std::span<const std::size_t> labels, double l2) {
  const auto n = features.rows();
  Eigen::MatrixXd logits = features * head.weights;
  logits.rowwise() += head.bias;
  const Eigen::MatrixXd logp = log_softmax_rows(logits);

  HeadLoss out;
  Eigen::MatrixXd dlogits = logp.array().exp().matrix();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    out.loss -= logp(i, y);
    dlogits(i, y) -= 1.0;
  }
  out.loss /= static_cast<double>(n);
  out.loss += 0.5 * l2 * head.weights.squaredNorm();
  dlogits /= static_cast<double>(n);
  out.grad_weights = features.transpose() * dlogits + l2 * head.weights;
  out.grad_bias = dlogits.colwise().sum();
  return out;
}

HeadModel train_head(const std::vector<std::vector<float>>& features,
                     const std::vector<std::size_t>& labels, const LabelSpace& space,
                     const HeadHyperParams& hp, const BackboneSpec& backbone) {
  check_training_inputs(features, labels, space);
  if (hp.epochs < 0) fail(ErrorKind::validation, "epochs must be non-negative");
  const Eigen::MatrixXd x = feature_matrix(features);
  BackboneSpec spec = backbone;
  spec.feature_dim = static_cast<int>(x.cols());

  HeadModel head = HeadModel::zeros(space, spec);
  head.training.epochs = hp.epochs;
  head.training.learning_rate = hp.learning_rate;
  head.training.l2 = hp.l2;
  head.training.seed = hp.seed;
  head.training.initial_loss = head_loss(head, x, labels, hp.l2).loss;

  // Learning rate is relative to the curvature bound (1 + mean |x|^2) / 2.
  const double step = hp.learning_rate / (1.0 + x.rowwise().squaredNorm().mean());
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const HeadLoss g = head_loss(head, x, labels, hp.l2);
    head.weights -= step * g.grad_weights;
    head.bias -= step * g.grad_bias;
    head.training.loss_history.push_back(head_loss(head, x, labels, hp.l2).loss);
  }
  snap_to_float32(head.weights);
  snap_to_float32(head.bias);
  head.training.final_loss = head_loss(head, x, labels, hp.l2).loss;
  return head;
}

Distribution head_distribution(const HeadModel& head, std::span<const float> features) {
  if (static_cast<Eigen::Index>(features.size()) != head.weights.rows()) {
    fail(ErrorKind::validation, "feature vector has " + std::to_string(features.size()) +
                                    " entries, head expects " +
                                    std::to_string(head.weights.rows()));
  }
  Eigen::RowVectorXd f(static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) f(static_cast<Eigen::Index>(i)) = features[i];
  const Eigen::RowVectorXd logits = f * head.weights + head.bias;
  return {softmax(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())))};
}

Prediction predict_features(const HeadModel& head, std::span<const float> features) {
  return top1(head_distribution(head, features), head.space, head.threshold);
}

Prediction predict_image(const HeadModel& head, const Backbone& backbone,
                         std::span<const std::uint8_t> image_bytes) {
  if (head.backbone.id != backbone.spec().id ||
      head.backbone.feature_dim != backbone.spec().feature_dim) {
    fail(ErrorKind::configuration, "model was trained on backbone '" + head.backbone.id +
                                       "' but backbone '" + backbone.spec().id +
                                       "' was supplied");
  }
  const ImageTensor t = preprocess(image_bytes, backbone.spec().input_size);
  return predict_features(head, embed(backbone, t));
}

EvalReport evaluate(const HeadModel& head, const Backbone& backbone, const Manifest& manifest) {
  return evaluate_manifest(manifest, head.space, [&](const ManifestEntry& e) {
    return predict_image(head, backbone, read_file(manifest.resolve(e)));
  });
}

void save_head(const HeadModel& head, const std::filesystem::path& dir) {
  nlohmann::json meta = {
      {"kind", "image_head"},
      {"task", head.task()},
      {"labels", head.space.labels()},
      {"backbone", head.backbone},
      {"feature_dim", head.feature_dim()},
      {"threshold", head.threshold},
      {"training",
       {{"epochs", head.training.epochs},
        {"learning_rate", head.training.learning_rate},
        {"l2", head.training.l2},
        {"seed", head.training.seed},
        {"initial_loss", head.training.initial_loss},
        {"final_loss", head.training.final_loss}}}};
  write_artifact(dir, std::move(meta),
                 {to_tensor_data("head.W", head.weights), to_tensor_data("head.b", head.bias)});
}

HeadModel head_from_artifact(const Artifact& artifact) {
  const auto& m = artifact.meta;
  HeadModel head;
  try {
    if (m.at("kind").get<std::string>() != "image_head") {
      fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() + "' is not an image head");
    }
    head.space = build_label_space(m.at("task").get<TaskId>(),
                                   m.at("labels").get<std::vector<std::string>>());
    head.backbone = m.at("backbone").get<BackboneSpec>();
    head.threshold = m.value("threshold", kDefaultThreshold);
    const auto& t = m.at("training");
    head.training.epochs = t.at("epochs").get<int>();
    head.training.learning_rate = t.at("learning_rate").get<double>();
    head.training.l2 = t.at("l2").get<double>();
    head.training.seed = t.at("seed").get<std::uint64_t>();
    head.training.initial_loss = t.value("initial_loss", 0.0);
    head.training.final_loss = t.at("final_loss").get<double>();
    const auto dim = m.at("feature_dim").get<std::size_t>();
    if (dim != static_cast<std::size_t>(head.backbone.feature_dim)) {
      fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() +
                                      "': feature_dim disagrees with its backbone");
    }
    head.weights = matrix_from(artifact.tensor("head.W", {dim, head.space.size()}));
    head.bias = row_vector_from(artifact.tensor("head.b", {head.space.size()}));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::model_load,
         "artifact '" + artifact.dir.string() + "': malformed model.json: " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::model_load) throw;
    fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() + "': " + e.what());
  }
  if (!head.weights.allFinite() || !head.bias.allFinite()) {
    fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() + "': non-finite weights");
  }
  return head;
}

HeadModel load_head(const std::filesystem::path& dir) { return head_from_artifact(read_artifact(dir)); }

}  // namespace taurus
