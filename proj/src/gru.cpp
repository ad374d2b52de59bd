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

#include "taurus/gru.hpp"

#include <cmath>

#include "taurus/error.hpp"

namespace taurus {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_shapes(const GruLayerParams& p, const Eigen::MatrixXd& inputs, const StepMask& mask,
                  const Eigen::RowVectorXd& h0) {
  if (inputs.cols() != p.input_dim()) {
    fail(ErrorKind::validation, "GRU input has " + std::to_string(inputs.cols()) +
                                    " features, layer expects " + std::to_string(p.input_dim()));
  }
  if (static_cast<Eigen::Index>(mask.size()) != inputs.rows()) {
    fail(ErrorKind::validation, "GRU mask length differs from the sequence length");
  }
  if (h0.size() != p.units()) fail(ErrorKind::validation, "GRU initial state has the wrong size");
}

}  // namespace

GruLayerParams GruLayerParams::zeros(int input_dim, int units) {
  GruLayerParams p;
  p.W = Eigen::MatrixXd::Zero(input_dim, 3 * units);
  p.U = Eigen::MatrixXd::Zero(units, 3 * units);
  p.b_in = Eigen::RowVectorXd::Zero(3 * units);
  p.b_rec = Eigen::RowVectorXd::Zero(3 * units);
  return p;
}

GruTrace gru_forward_trace(const GruLayerParams& p, const Eigen::MatrixXd& inputs,
                           const StepMask& mask, const Eigen::RowVectorXd& h0) {
  check_shapes(p, inputs, mask, h0);
  const Eigen::Index steps = inputs.rows();
  const Eigen::Index u = p.units();

  GruTrace tr;
  tr.inputs = inputs;
  tr.mask = mask;
  tr.h_prev.resize(steps, u);
  tr.z.setZero(steps, u);
  tr.r.setZero(steps, u);
  tr.n.setZero(steps, u);
  tr.rec_n.setZero(steps, u);
  tr.outputs.resize(steps, u);

  Eigen::MatrixXd in_gates = inputs * p.W;
  in_gates.rowwise() += p.b_in;

  Eigen::RowVectorXd h = h0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    tr.h_prev.row(t) = h;
    if (!mask[static_cast<std::size_t>(t)]) {
      tr.outputs.row(t) = h;
      continue;
    }
    const Eigen::RowVectorXd rec = h * p.U + p.b_rec;
    for (Eigen::Index j = 0; j < u; ++j) {
      const double z = sigmoid(in_gates(t, j) + rec(j));
      const double r = sigmoid(in_gates(t, u + j) + rec(u + j));
      const double n = std::tanh(in_gates(t, 2 * u + j) + r * rec(2 * u + j));
      tr.z(t, j) = z;
      tr.r(t, j) = r;
      tr.n(t, j) = n;
      tr.rec_n(t, j) = rec(2 * u + j);
    }
    h = (1.0 - tr.z.row(t).array()) * tr.n.row(t).array() + tr.z.row(t).array() * h.array();
    tr.outputs.row(t) = h;
  }
  return tr;
}

Eigen::MatrixXd gru_forward(const GruLayerParams& params, const Eigen::MatrixXd& inputs,
                            const StepMask& mask, const Eigen::RowVectorXd& h0) {
  return gru_forward_trace(params, inputs, mask, h0).outputs;
}

Eigen::MatrixXd gru_backward(const GruLayerParams& p, const GruTrace& tr,
                             const Eigen::MatrixXd& d_outputs, GruLayerParams& grads,
                             bool want_input_grad) {
  const Eigen::Index steps = tr.inputs.rows();
  const Eigen::Index u = p.units();
  if (d_outputs.rows() != steps || d_outputs.cols() != u) {
    fail(ErrorKind::validation, "GRU output gradient has the wrong shape");
  }

  // Pre-activation gradients per step: [z | r | n] for the input path and the
  // recurrent path. They differ only in the n block, where the recurrent side
  // is scaled by r.
  Eigen::MatrixXd d_in_gates = Eigen::MatrixXd::Zero(steps, 3 * u);
  Eigen::MatrixXd d_rec_gates = Eigen::MatrixXd::Zero(steps, 3 * u);

  Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(u);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Eigen::RowVectorXd dh = d_outputs.row(t) + dh_next;
    if (!tr.mask[static_cast<std::size_t>(t)]) {
      dh_next = dh;
      continue;
    }
    Eigen::RowVectorXd dh_prev(u);
    for (Eigen::Index j = 0; j < u; ++j) {
      const double z = tr.z(t, j);
      const double r = tr.r(t, j);
      const double n = tr.n(t, j);
      const double hp = tr.h_prev(t, j);
      const double dn = dh(j) * (1.0 - z);
      const double dz = dh(j) * (hp - n);
      const double da_n = dn * (1.0 - n * n);
      const double dr = da_n * tr.rec_n(t, j);
      const double da_z = dz * z * (1.0 - z);
      const double da_r = dr * r * (1.0 - r);
      d_in_gates(t, j) = da_z;
      d_in_gates(t, u + j) = da_r;
      d_in_gates(t, 2 * u + j) = da_n;
      d_rec_gates(t, j) = da_z;
      d_rec_gates(t, u + j) = da_r;
      d_rec_gates(t, 2 * u + j) = da_n * r;
      dh_prev(j) = dh(j) * z;
    }
    dh_next = dh_prev + d_rec_gates.row(t) * p.U.transpose();
  }

  grads.W.noalias() += tr.inputs.transpose() * d_in_gates;
  grads.b_in += d_in_gates.colwise().sum();
  grads.U.noalias() += tr.h_prev.transpose() * d_rec_gates;
  grads.b_rec += d_rec_gates.colwise().sum();
  if (!want_input_grad) return {};
  return d_in_gates * p.W.transpose();
}

}  // namespace taurus
