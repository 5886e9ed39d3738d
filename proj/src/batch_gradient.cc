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

#include "pegrl/batch_gradient.h"

#include <cmath>
#include <stdexcept>

namespace pegrl {
namespace {

// Writes dL/dtheta for one sample into `row`; returns (loss, |td|).
std::pair<double, double> SampleGradient(const QNetwork& net, const ReplaySample& s,
                                         double gamma, std::span<double> row) {
  double target = s.reward;
  if (!s.terminal) {
    std::vector<double> q_next = Forward(net, s.next_history).q;
    target = TdTarget(s.reward, q_next, std::pow(gamma, s.steps), false);
  }
  std::vector<double> q = QGradient(net, s.history, s.action, row);
  double td = target - q[s.action];
  for (double& g : row) g *= -td;
  return {0.5 * td * td, std::abs(td)};
}

BatchGradientResult Reduce(const std::vector<double>& rows, size_t n, size_t p,
                           const std::vector<double>& loss, const std::vector<double>& td) {
  BatchGradientResult out;
  out.grad.assign(p, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double* row = rows.data() + i * p;
    for (size_t k = 0; k < p; ++k) out.grad[k] += row[k];
    out.mean_loss += loss[i];
    out.mean_abs_td += td[i];
  }
  double inv = 1.0 / static_cast<double>(n);
  for (double& g : out.grad) g *= inv;
  out.mean_loss *= inv;
  out.mean_abs_td *= inv;
  return out;
}

}  // namespace

BatchGradientResult BatchGradient(const QNetwork& net, std::span<const ReplaySample> batch,
                                  double gamma) {
  if (batch.empty()) throw DomainError("BatchGradient: empty batch");
  const size_t n = batch.size();
  const size_t p = net.num_params();
  std::vector<double> rows(n * p), loss(n), td(n);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      auto [l, t] = SampleGradient(net, batch[i], gamma,
                                   std::span<double>(rows.data() + i * p, p));
      loss[i] = l;
      td[i] = t;
    } catch (...) {
#pragma omp critical
      error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return Reduce(rows, n, p, loss, td);
}

BatchGradientResult BatchGradientSerial(const QNetwork& net,
                                        std::span<const ReplaySample> batch, double gamma) {
  if (batch.empty()) throw DomainError("BatchGradient: empty batch");
  const size_t n = batch.size();
  const size_t p = net.num_params();
  std::vector<double> rows(n * p), loss(n), td(n);
  for (size_t i = 0; i < n; ++i) {
    auto [l, t] = SampleGradient(net, batch[i], gamma, std::span<double>(rows.data() + i * p, p));
    loss[i] = l;
    td[i] = t;
  }
  return Reduce(rows, n, p, loss, td);
}

}  // namespace pegrl
