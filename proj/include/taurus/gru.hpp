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

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace taurus {

class Rng;

using StepMask = std::vector<bool>;

/// 3 * (d*u + u*u + 2*u): input matrix, recurrent matrix, and the two bias
/// vectors, for each of the three gates.
constexpr std::size_t gru_param_count(std::size_t input_dim, std::size_t units) noexcept {
  return 3 * (input_dim * units + units * units + 2 * units);
}

/// Gate blocks are packed [z | r | n] along the column axis. Inputs and
/// hidden states are row vectors, so a step computes x W + b_in and h U + b_rec.
struct GruLayerParams {
  Eigen::MatrixXd W;        // input_dim x 3u
  Eigen::MatrixXd U;        // u x 3u
  Eigen::RowVectorXd b_in;  // 3u
  Eigen::RowVectorXd b_rec; // 3u

  static GruLayerParams zeros(int input_dim, int units);

  int input_dim() const noexcept { return static_cast<int>(W.rows()); }
  int units() const noexcept { return static_cast<int>(U.rows()); }
  std::size_t param_count() const noexcept {
    return static_cast<std::size_t>(W.size() + U.size() + b_in.size() + b_rec.size());
  }

  template <typename F>
  void for_each_tensor(const std::string& prefix, F&& f) {
    f(prefix + ".W", W);
    f(prefix + ".U", U);
    f(prefix + ".b_in", b_in);
    f(prefix + ".b_rec", b_rec);
  }
  template <typename F>
  void for_each_tensor(const std::string& prefix, F&& f) const {
    f(prefix + ".W", W);
    f(prefix + ".U", U);
    f(prefix + ".b_in", b_in);
    f(prefix + ".b_rec", b_rec);
  }
};

/// Activations kept from a forward pass for backpropagation.
struct GruTrace {
  Eigen::MatrixXd inputs;  // T x d
  Eigen::MatrixXd h_prev;  // T x u, state entering each step
  Eigen::MatrixXd z, r, n; // T x u
  Eigen::MatrixXd rec_n;   // T x u, h U_n + b_rec_n
  Eigen::MatrixXd outputs; // T x u
  StepMask mask;
};

/// Runs the layer over T steps and returns the T x u hidden states. A step
/// whose mask bit is false copies the previous state through unchanged.
///   z = sigmoid(x W_z + b_in_z + h U_z + b_rec_z)
///   r = sigmoid(x W_r + b_in_r + h U_r + b_rec_r)
///   n = tanh(x W_n + b_in_n + r * (h U_n + b_rec_n))
///   h' = (1 - z) * n + z * h
Eigen::MatrixXd gru_forward(const GruLayerParams& params, const Eigen::MatrixXd& inputs,
                            const StepMask& mask, const Eigen::RowVectorXd& h0);

GruTrace gru_forward_trace(const GruLayerParams& params, const Eigen::MatrixXd& inputs,
                           const StepMask& mask, const Eigen::RowVectorXd& h0);

/// Backpropagates `d_outputs` (T x u, the loss gradient arriving at every
/// step's output) through the recorded pass. Parameter gradients are added
/// into `grads`; the return value is the T x d gradient for the inputs, or
/// an empty matrix when `want_input_grad` is false.
Eigen::MatrixXd gru_backward(const GruLayerParams& params, const GruTrace& trace,
                             const Eigen::MatrixXd& d_outputs, GruLayerParams& grads,
                             bool want_input_grad = true);

}  // namespace taurus
