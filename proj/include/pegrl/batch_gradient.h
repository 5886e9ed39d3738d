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

#ifndef PEGRL_BATCH_GRADIENT_H_
#define PEGRL_BATCH_GRADIENT_H_

// Minibatch Q-learning gradient. The OpenMP kernel computes each sample into
// its own row and reduces rows in sample order, so it matches the serial
// reference bit for bit regardless of the thread count.

#include <span>
#include <vector>

#include "pegrl/lstm_q.h"

namespace pegrl {

struct ReplaySample {
  // States up to and including s, oldest first.
  std::vector<StateVector> history;
  // States up to and including s'.
  std::vector<StateVector> next_history;
  int action = 0;
  // Discounted reward over `steps` transitions; the target bootstraps from
  // next_history with gamma^steps.
  double reward = 0.0;
  int steps = 1;
  bool terminal = false;
};

struct BatchGradientResult {
  // Mean of dL/dtheta over the batch.
  std::vector<double> grad;
  double mean_loss = 0.0;
  double mean_abs_td = 0.0;
};

// Targets bootstrap from the same network (no target copy).
BatchGradientResult BatchGradient(const QNetwork& net, std::span<const ReplaySample> batch,
                                  double gamma);

BatchGradientResult BatchGradientSerial(const QNetwork& net,
                                        std::span<const ReplaySample> batch, double gamma);

}  // namespace pegrl

#endif  // PEGRL_BATCH_GRADIENT_H_
