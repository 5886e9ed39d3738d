// Copyright 2026 The pegrl Authors.
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

#ifndef PEGRL_LSTM_Q_H_
#define PEGRL_LSTM_Q_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pegrl/common.h"
#include "pegrl/env.h"

namespace pegrl {

struct LstmShape {
  int input = kStateDim;
  int h1 = 20;
  int h2 = 15;
  int actions = kSearchActions;

  bool operator==(const LstmShape&) const = default;
};

// Offsets of one LSTM layer inside the flat parameter vector. The weight
// matrix is 4*hidden x (in + hidden), row-major, gate blocks ordered
// input, forget, candidate, output; it acts on [x; h_prev].
struct LayerLayout {
  int in = 0;
  int hidden = 0;
  size_t weights = 0;
  size_t bias = 0;

  int cols() const { return in + hidden; }
};

// Two stacked LSTM layers and an affine Q head over a flat parameter vector.
// Inputs are multiplied by a fixed per-channel scale before the first layer.
class QNetwork {
 public:
  QNetwork() : QNetwork(LstmShape{}) {}
  // All parameters zero, input scale one.
  explicit QNetwork(const LstmShape& shape);

  // Uniform(+-1/sqrt(fan_in)) weights, zero biases, forget-gate bias one.
  static QNetwork Initialized(const LstmShape& shape, Rng& rng);

  const LstmShape& shape() const { return shape_; }
  size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<const double> input_scale() const { return input_scale_; }
  void set_input_scale(std::span<const double> scale);

  const LayerLayout& layer1() const { return layer1_; }
  const LayerLayout& layer2() const { return layer2_; }
  size_t head_weights() const { return head_w_; }
  size_t head_bias() const { return head_b_; }

  bool operator==(const QNetwork& other) const;

 private:
  LstmShape shape_;
  LayerLayout layer1_;
  LayerLayout layer2_;
  size_t head_w_ = 0;
  size_t head_b_ = 0;
  std::vector<double> params_;
  std::vector<double> input_scale_;
};

struct RecurrentState {
  std::vector<double> h1, c1, h2, c2;

  static RecurrentState Zero(const LstmShape& shape);
};

struct ForwardResult {
  std::vector<double> q;
  RecurrentState state;
};

// Runs the sequence from a zeroed recurrent state and returns the Q values
// after the last element.
ForwardResult Forward(const QNetwork& net, std::span<const StateVector> sequence);

// Advances `state` by one input and returns the Q values.
std::vector<double> StepForward(const QNetwork& net, RecurrentState& state,
                                const StateVector& input);

// Q values and d Q_action / d theta over the sequence (full BPTT). `grad` must
// have num_params() entries; it is overwritten.
std::vector<double> QGradient(const QNetwork& net, std::span<const StateVector> sequence,
                              int action, std::span<double> grad);

double TdTarget(double reward, std::span<const double> q_next, double gamma, bool terminal);

// Index of the largest value, lowest index on ties.
int GreedyAction(std::span<const double> q);

// theta <- theta - alpha * g, with g rescaled to `clip_norm` when its norm is
// larger (clip_norm <= 0 disables clipping). Returns the pre-clip norm.
// Throws TrainingError if g is not finite.
double ApplyGradient(QNetwork& net, std::span<const double> grad, double alpha,
                     double clip_norm);

struct UpdateStats {
  double q = 0.0;
  double td_error = 0.0;
  double grad_norm = 0.0;
};

// One gradient step on 0.5 * (target - Q(sequence, action))^2.
UpdateStats BackwardUpdate(QNetwork& net, std::span<const StateVector> sequence,
                           int action, double target, double alpha,
                           double clip_norm = 1.0);

// Weight file: "PGHW", u32 version, u32 input, u32 h1, u32 h2, u32 actions,
// u64 param count, f64 input scale[input], f64 params[count]; little-endian.
std::vector<uint8_t> SerializeWeights(const QNetwork& net);
QNetwork DeserializeWeights(std::span<const uint8_t> bytes);
void SaveWeights(const QNetwork& net, const std::string& path);
QNetwork LoadWeights(const std::string& path);

}  // namespace pegrl

#endif  // PEGRL_LSTM_Q_H_
