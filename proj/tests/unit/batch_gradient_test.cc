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

#include <omp.h>

#include <cstring>

#include "doctest.h"
#include "pegrl/batch_gradient.h"

namespace pegrl {
namespace {

std::vector<ReplaySample> RandomBatch(Rng& rng, int n, int actions) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ReplaySample> batch(n);
  for (auto& s : batch) {
    int t = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < t; ++i) {
      StateVector x;
      for (double& v : x) v = g(rng);
      s.history.push_back(x);
    }
    s.next_history = s.history;
    s.next_history.push_back(s.history.front());
    s.action = static_cast<int>(rng() % actions);
    s.reward = 0.1 * g(rng);
    s.terminal = rng() % 5 == 0;
  }
  return batch;
}

TEST_CASE("parallel minibatch gradient equals the serial reference bit for bit") {
  Rng rng(12);
  QNetwork net = QNetwork::Initialized(LstmShape{}, rng);
  auto batch = RandomBatch(rng, 64, 4);
  BatchGradientResult ref = BatchGradientSerial(net, batch, 0.9);
  for (int threads : {1, 2, 3, 4}) {
    omp_set_num_threads(threads);
    BatchGradientResult par = BatchGradient(net, batch, 0.9);
    REQUIRE(par.grad.size() == ref.grad.size());
    CHECK(std::memcmp(par.grad.data(), ref.grad.data(), ref.grad.size() * sizeof(double)) == 0);
    CHECK(par.mean_loss == ref.mean_loss);
    CHECK(par.mean_abs_td == ref.mean_abs_td);
  }
}

TEST_CASE("minibatch gradient is the mean of per-sample loss gradients") {
  Rng rng(13);
  QNetwork net = QNetwork::Initialized(LstmShape{7, 4, 3, 5}, rng);
  auto batch = RandomBatch(rng, 5, 5);
  BatchGradientResult out = BatchGradientSerial(net, batch, 0.95);
  std::vector<double> want(net.num_params(), 0.0), g(net.num_params());
  double loss = 0.0;
  for (const auto& s : batch) {
    double target = s.reward;
    if (!s.terminal) target = TdTarget(s.reward, Forward(net, s.next_history).q, 0.95, false);
    std::vector<double> q = QGradient(net, s.history, s.action, g);
    double td = target - q[s.action];
    loss += 0.5 * td * td;
    for (size_t i = 0; i < g.size(); ++i) want[i] += -td * g[i] / batch.size();
  }
  CHECK(out.mean_loss == doctest::Approx(loss / batch.size()));
  for (size_t i = 0; i < want.size(); ++i) CHECK(out.grad[i] == doctest::Approx(want[i]));
}

TEST_CASE("errors inside the parallel region propagate") {
  Rng rng(14);
  QNetwork net = QNetwork::Initialized(LstmShape{}, rng);
  auto batch = RandomBatch(rng, 8, 4);
  batch[3].action = 9;
  CHECK_THROWS_AS(BatchGradient(net, batch, 0.9), DomainError);
  CHECK_THROWS_AS(BatchGradient(net, std::vector<ReplaySample>{}, 0.9), DomainError);
}

}  // namespace
}  // namespace pegrl
