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

#include "taurus/sequence_head.hpp"

#include <cmath>
#include <numeric>

#include "taurus/error.hpp"
#include "taurus/rng.hpp"

namespace taurus {

namespace {

constexpr double kInitRange = 0.05;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct DenseOut {
  Eigen::RowVectorXd pre1;    // dense1 pre-activation
  Eigen::RowVectorXd act1;    // ReLU(pre1)
  Eigen::RowVectorXd logits;
};

DenseOut dense_forward(const SequenceParams& p, const Eigen::RowVectorXd& in) {
  DenseOut d;
  d.pre1 = in * p.dense1_W + p.dense1_b;
  d.act1 = d.pre1.cwiseMax(0.0);
  d.logits = d.act1 * p.dense2_W + p.dense2_b;
  return d;
}

std::vector<double> as_vector(const Eigen::RowVectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

void check_sequence(const SequenceHead& head, const FeatureSequence& seq) {
  seq.validate();
  if (seq.feature_dim() != head.config.input_dim) {
    fail(ErrorKind::validation, "sequence has " + std::to_string(seq.feature_dim()) +
                                    " features per step, head expects " +
                                    std::to_string(head.config.input_dim));
  }
}

}  // namespace

SequenceParams SequenceParams::zeros(const SequenceHeadConfig& c) {
  SequenceParams p;
  p.gru1 = GruLayerParams::zeros(c.input_dim, c.units1);
  p.gru2 = GruLayerParams::zeros(c.units1, c.units2);
  p.dense1_W = Eigen::MatrixXd::Zero(c.units2, c.dense_units);
  p.dense1_b = Eigen::RowVectorXd::Zero(c.dense_units);
  p.dense2_W = Eigen::MatrixXd::Zero(c.dense_units, c.n_classes);
  p.dense2_b = Eigen::RowVectorXd::Zero(c.n_classes);
  return p;
}

SequenceHead make_sequence_head(const LabelSpace& space, SequenceHeadConfig config,
                                std::uint64_t seed, const BackboneSpec& frame_backbone) {
  config.n_classes = static_cast<int>(space.size());
  if (config.input_dim <= 0 || config.units1 <= 0 || config.units2 <= 0 ||
      config.dense_units <= 0) {
    fail(ErrorKind::validation, "sequence head dimensions must be positive");
  }
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    fail(ErrorKind::validation, "dropout rate must lie in [0, 1)");
  }
  SequenceHead head;
  head.space = space;
  head.frame_backbone = frame_backbone;
  head.config = config;
  head.params = SequenceParams::zeros(config);
  Rng rng(seed);
  head.params.for_each_tensor([&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = static_cast<double>(static_cast<float>(rng.uniform(-kInitRange, kInitRange)));
    }
  });
  return head;
}

LayerParamCounts layer_param_counts(const SequenceHead& head) {
  const auto& p = head.params;
  LayerParamCounts c;
  c.gru1 = p.gru1.param_count();
  c.gru2 = p.gru2.param_count();
  c.dense1 = static_cast<std::size_t>(p.dense1_W.size() + p.dense1_b.size());
  c.dense2 = static_cast<std::size_t>(p.dense2_W.size() + p.dense2_b.size());
  c.total = c.gru1 + c.gru2 + c.dense1 + c.dense2;
  return c;
}

std::size_t param_count(const SequenceHead& head) { return layer_param_counts(head).total; }

Distribution video_distribution(const SequenceHead& head, const FeatureSequence& seq) {
  check_sequence(head, seq);
  const auto& p = head.params;
  const Eigen::MatrixXd x = seq.features.cast<double>();
  const Eigen::MatrixXd h1 = gru_forward(p.gru1, x, seq.mask, Eigen::RowVectorXd::Zero(p.gru1.units()));
  const Eigen::MatrixXd h2 = gru_forward(p.gru2, h1, seq.mask, Eigen::RowVectorXd::Zero(p.gru2.units()));
  // Masked steps copy the state, so the last row is the last valid state.
  const DenseOut d = dense_forward(p, h2.row(h2.rows() - 1));
  return {softmax(as_vector(d.logits))};
}

Prediction predict_video(const SequenceHead& head, const FeatureSequence& seq) {
  return top1(video_distribution(head, seq), head.space, head.threshold);
}

double sequence_loss(const SequenceHead& head, std::span<const LabeledSequence> batch) {
  if (batch.empty()) fail(ErrorKind::validation, "empty batch");
  double loss = 0.0;
  for (const auto& item : batch) {
    loss -= std::log(video_distribution(head, item.sequence).probs.at(item.label));
  }
  return loss / static_cast<double>(batch.size());
}

namespace {

// Adds scale * d(loss)/d(params) for one sequence into `grads` and returns
// the unscaled loss.
double accumulate_item(const SequenceHead& head, const LabeledSequence& item, double scale,
                       SequenceParams& grads, Rng* dropout_rng, double dropout_rate) {
  const auto& p = head.params;
  const auto& seq = item.sequence;
  check_sequence(head, seq);
  if (item.label >= head.space.size()) fail(ErrorKind::validation, "label index out of range");

  // Only the valid prefix matters: masked steps would copy state forward.
  const Eigen::MatrixXd x = seq.features.topRows(seq.valid_len).cast<double>();
  const StepMask all(static_cast<std::size_t>(seq.valid_len), true);
  const GruTrace t1 = gru_forward_trace(p.gru1, x, all, Eigen::RowVectorXd::Zero(p.gru1.units()));
  const GruTrace t2 =
      gru_forward_trace(p.gru2, t1.outputs, all, Eigen::RowVectorXd::Zero(p.gru2.units()));
  const Eigen::RowVectorXd h2 = t2.outputs.row(seq.valid_len - 1);

  Eigen::RowVectorXd keep = Eigen::RowVectorXd::Ones(h2.size());
  if (dropout_rng != nullptr) {
    for (Eigen::Index j = 0; j < keep.size(); ++j) {
      keep(j) = dropout_rng->uniform() < dropout_rate ? 0.0 : 1.0 / (1.0 - dropout_rate);
    }
  }
  const Eigen::RowVectorXd a = h2.cwiseProduct(keep);
  const DenseOut d = dense_forward(p, a);
  std::vector<double> probs = softmax(as_vector(d.logits));
  const double loss = -std::log(probs[item.label]);

  Eigen::RowVectorXd dlogits = Eigen::Map<Eigen::RowVectorXd>(probs.data(), d.logits.size());
  dlogits(static_cast<Eigen::Index>(item.label)) -= 1.0;
  dlogits *= scale;

  grads.dense2_W.noalias() += d.act1.transpose() * dlogits;
  grads.dense2_b += dlogits;
  const Eigen::RowVectorXd dact1 = dlogits * p.dense2_W.transpose();
  const Eigen::RowVectorXd dpre1 =
      (d.pre1.array() > 0.0).select(dact1, Eigen::RowVectorXd::Zero(dact1.size()));
  grads.dense1_W.noalias() += a.transpose() * dpre1;
  grads.dense1_b += dpre1;
  const Eigen::RowVectorXd dh2 = (dpre1 * p.dense1_W.transpose()).cwiseProduct(keep);

  Eigen::MatrixXd d_out2 = Eigen::MatrixXd::Zero(seq.valid_len, p.gru2.units());
  d_out2.row(seq.valid_len - 1) = dh2;
  const Eigen::MatrixXd d_out1 = gru_backward(p.gru2, t2, d_out2, grads.gru2);
  gru_backward(p.gru1, t1, d_out1, grads.gru1, false);
  return loss;
}

}  // namespace

double sequence_loss_and_grad(const SequenceHead& head, std::span<const LabeledSequence> batch,
                              SequenceParams& grads, Rng* dropout_rng, double dropout_rate) {
  if (batch.empty()) fail(ErrorKind::validation, "empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& item : batch) {
    loss += accumulate_item(head, item, scale, grads, dropout_rng, dropout_rate);
  }
  return loss * scale;
}

SequenceHead train_sequence_head(const std::vector<LabeledSequence>& dataset,
                                 const LabelSpace& space, const SequenceHyperParams& hp,
                                 SequenceHeadConfig config, const BackboneSpec& frame_backbone) {
  if (dataset.empty()) fail(ErrorKind::validation, "training set is empty");
  if (hp.batch_size <= 0) fail(ErrorKind::validation, "batch size must be positive");
  if (hp.epochs < 0) fail(ErrorKind::validation, "epochs must be non-negative");
  for (const auto& item : dataset) {
    if (item.label >= space.size()) {
      fail(ErrorKind::validation, "label index " + std::to_string(item.label) + " is out of range");
    }
  }
  config.dropout_rate = hp.dropout_rate;
  config.input_dim = dataset.front().sequence.feature_dim();
  SequenceHead head = make_sequence_head(space, config, hp.seed, frame_backbone);
  head.training.epochs = hp.epochs;
  head.training.learning_rate = hp.learning_rate;
  head.training.batch_size = hp.batch_size;
  head.training.seed = hp.seed;
  head.training.initial_loss = sequence_loss(head, dataset);

  SequenceParams m = SequenceParams::zeros(head.config);
  SequenceParams v = SequenceParams::zeros(head.config);
  Rng rng(mix_seed(hp.seed, 0x7472616e));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      SequenceParams g = SequenceParams::zeros(head.config);
      for (auto k = start; k < end; ++k) {
        epoch_loss += accumulate_item(head, dataset[order[k]], scale, g, &rng, hp.dropout_rate);
      }
      ++step;
      const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));

      // Walk the four parameter sets in lockstep; for_each_tensor visits in a
      // fixed order, so collect pointers first.
      std::vector<double*> pp, gp, mp, vp;
      std::vector<Eigen::Index> sizes;
      head.params.for_each_tensor([&](const std::string&, auto& t) {
        pp.push_back(t.data());
        sizes.push_back(t.size());
      });
      g.for_each_tensor([&](const std::string&, auto& t) { gp.push_back(t.data()); });
      m.for_each_tensor([&](const std::string&, auto& t) { mp.push_back(t.data()); });
      v.for_each_tensor([&](const std::string&, auto& t) { vp.push_back(t.data()); });
      for (std::size_t k = 0; k < pp.size(); ++k) {
        for (Eigen::Index i = 0; i < sizes[k]; ++i) {
          const double gi = gp[k][i];
          mp[k][i] = kAdamBeta1 * mp[k][i] + (1.0 - kAdamBeta1) * gi;
          vp[k][i] = kAdamBeta2 * vp[k][i] + (1.0 - kAdamBeta2) * gi * gi;
          const double mhat = mp[k][i] / c1;
          const double vhat = vp[k][i] / c2;
          pp[k][i] -= hp.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
        }
      }
    }
    head.training.epoch_loss.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  head.params.for_each_tensor([](const std::string&, auto& t) { snap_to_float32(t); });
  head.training.final_loss = sequence_loss(head, dataset);
  return head;
}

void save_sequence_head(const SequenceHead& head, const std::filesystem::path& dir) {
  const auto& c = head.config;
  nlohmann::json meta = {
      {"kind", "sequence_head"},
      {"task", head.space.task()},
      {"labels", head.space.labels()},
      {"frame_backbone", head.frame_backbone},
      {"feature_dim", c.input_dim},
      {"threshold", head.threshold},
      {"architecture",
       {{"steps", kSequenceLength},
        {"input_dim", c.input_dim},
        {"gru1_units", c.units1},
        {"gru2_units", c.units2},
        {"dense_units", c.dense_units},
        {"n_classes", c.n_classes},
        {"dropout_rate", c.dropout_rate},
        {"gate_order", "z,r,n"},
        {"dense1_activation", "relu"}}},
      {"training",
       {{"epochs", head.training.epochs},
        {"learning_rate", head.training.learning_rate},
        {"batch_size", head.training.batch_size},
        {"seed", head.training.seed},
        {"initial_loss", head.training.initial_loss},
        {"final_loss", head.training.final_loss}}}};
  std::vector<TensorData> tensors;
  head.params.for_each_tensor(
      [&](const std::string& name, const auto& t) { tensors.push_back(to_tensor_data(name, t)); });
  write_artifact(dir, std::move(meta), tensors);
}

SequenceHead sequence_head_from_artifact(const Artifact& artifact) {
  const auto& m = artifact.meta;
  SequenceHead head;
  try {
    if (m.at("kind").get<std::string>() != "sequence_head") {
      fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() + "' is not a sequence head");
    }
    head.space = build_label_space(m.at("task").get<TaskId>(),
                                   m.at("labels").get<std::vector<std::string>>());
    head.frame_backbone = m.at("frame_backbone").get<BackboneSpec>();
    head.threshold = m.value("threshold", kDefaultThreshold);
    const auto& a = m.at("architecture");
    auto& c = head.config;
    c.input_dim = a.at("input_dim").get<int>();
    c.units1 = a.at("gru1_units").get<int>();
    c.units2 = a.at("gru2_units").get<int>();
    c.dense_units = a.at("dense_units").get<int>();
    c.n_classes = a.at("n_classes").get<int>();
    c.dropout_rate = a.at("dropout_rate").get<double>();
    if (c.n_classes != static_cast<int>(head.space.size())) {
      fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() +
                                      "': n_classes disagrees with its labels");
    }
    const auto& t = m.at("training");
    head.training.epochs = t.at("epochs").get<int>();
    head.training.learning_rate = t.at("learning_rate").get<double>();
    head.training.batch_size = t.at("batch_size").get<int>();
    head.training.seed = t.at("seed").get<std::uint64_t>();
    head.training.initial_loss = t.value("initial_loss", 0.0);
    head.training.final_loss = t.at("final_loss").get<double>();

    head.params = SequenceParams::zeros(c);
    head.params.for_each_tensor([&](const std::string& name, auto& tensor) {
      std::vector<std::size_t> shape;
      if (tensor.rows() == 1 && tensor.IsRowMajor) {
        shape = {static_cast<std::size_t>(tensor.size())};
      } else {
        shape = {static_cast<std::size_t>(tensor.rows()), static_cast<std::size_t>(tensor.cols())};
      }
      const TensorData& td = artifact.tensor(name, shape);
      for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
        for (Eigen::Index col = 0; col < tensor.cols(); ++col) {
          tensor(r, col) = td.values[static_cast<std::size_t>(r * tensor.cols() + col)];
        }
      }
      if (!tensor.allFinite()) {
        fail(ErrorKind::model_load,
             "artifact '" + artifact.dir.string() + "': tensor '" + name + "' is not finite");
      }
    });
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::model_load,
         "artifact '" + artifact.dir.string() + "': malformed model.json: " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::model_load) throw;
    fail(ErrorKind::model_load, "artifact '" + artifact.dir.string() + "': " + e.what());
  }
  return head;
}

SequenceHead load_sequence_head(const std::filesystem::path& dir) {
  return sequence_head_from_artifact(read_artifact(dir));
}

}  // namespace taurus
