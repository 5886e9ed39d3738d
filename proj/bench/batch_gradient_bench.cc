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

// Times the minibatch gradient: serial reference against the OpenMP kernel
// for 1..max threads, and checks that both give the same bits.

#include <omp.h>

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <vector>

#include "pegrl/batch_gradient.h"

int main(int argc, char** argv) {
  int batch = 64, window = 8, reps = 5;
  if (argc > 1) batch = std::atoi(argv[1]);
  if (argc > 2) reps = std::atoi(argv[2]);

  pegrl::Rng rng(7);
  pegrl::QNetwork net = pegrl::QNetwork::Initialized(pegrl::LstmShape{}, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<pegrl::ReplaySample> samples(batch);
  for (auto& s : samples) {
    for (int t = 0; t < window; ++t) {
      pegrl::StateVector x;
      for (double& v : x) v = g(rng);
      s.history.push_back(x);
    }
    s.next_history.assign(s.history.begin() + 1, s.history.end());
    s.next_history.push_back(s.history.front());
    s.action = static_cast<int>(rng() % 4);
    s.reward = 0.01 * g(rng);
  }

  double t0 = omp_get_wtime();
  pegrl::BatchGradientResult ref;
  for (int r = 0; r < reps; ++r) ref = pegrl::BatchGradientSerial(net, samples, 0.9);
  double serial = (omp_get_wtime() - t0) / reps;
  std::cout << "batch " << batch << ", window " << window << ", params " << net.num_params()
            << "\nserial:    " << serial * 1e3 << " ms\n";

  int max_threads = omp_get_max_threads();
  bool identical = true;
  for (int threads = 1; threads <= max_threads; ++threads) {
    omp_set_num_threads(threads);
    pegrl::BatchGradientResult out;
    t0 = omp_get_wtime();
    for (int r = 0; r < reps; ++r) out = pegrl::BatchGradient(net, samples, 0.9);
    double t = (omp_get_wtime() - t0) / reps;
    bool same = std::memcmp(out.grad.data(), ref.grad.data(),
                            ref.grad.size() * sizeof(double)) == 0;
    identical = identical && same;
    std::cout << "threads " << threads << ": " << t * 1e3 << " ms, speedup " << serial / t
              << (same ? "" : "  MISMATCH") << "\n";
  }
  return identical ? 0 : 1;
}
