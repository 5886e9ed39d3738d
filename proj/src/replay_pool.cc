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

#include <algorithm>

#include "pegrl/agent.h"

namespace pegrl {

ReplayPool::ReplayPool(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay capacity must be positive");
  ring_.resize(capacity);
}

void ReplayPool::Add(const Transition& t) {
  std::lock_guard<std::mutex> lock(mu_);
  ring_[head_] = t;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++added_;
}

void ReplayPool::AddEpisode(std::span<const Transition> episode) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const Transition& t : episode) {
    ring_[head_] = t;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
    ++added_;
  }
}

void ReplayPool::Clear() {
  std::lock_guard<std::mutex> lock(mu_);
  head_ = 0;
  size_ = 0;
}

size_t ReplayPool::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return size_;
}

uint64_t ReplayPool::total_added() const {
  std::lock_guard<std::mutex> lock(mu_);
  return added_;
}

const Transition& ReplayPool::AtLocked(size_t index) const {
  if (index >= size_) throw DomainError("replay index out of range");
  size_t oldest = (head_ + capacity_ - size_) % capacity_;
  return ring_[(oldest + index) % capacity_];
}

Transition ReplayPool::At(size_t index) const {
  std::lock_guard<std::mutex> lock(mu_);
  return AtLocked(index);
}

ReplaySample ReplayPool::MakeSampleLocked(size_t index, int window, int td_steps,
                                          double gamma) const {
  if (window <= 0) throw DomainError("history window must be positive");
  if (td_steps <= 0) throw DomainError("td_steps must be positive");
  const Transition& t = AtLocked(index);
  // Walk back over earlier transitions of the same episode.
  std::vector<StateVector> states;
  size_t i = index;
  int step = t.step_index;
  while (static_cast<int>(states.size()) + 1 < window && i > 0) {
    const Transition& prev = AtLocked(i - 1);
    if (prev.episode_id != t.episode_id || prev.step_index != step - 1) break;
    states.push_back(prev.s);
    --i;
    --step;
  }
  std::reverse(states.begin(), states.end());
  states.push_back(t.s);

  ReplaySample out;
  out.history = states;
  out.action = t.a;
  out.reward = t.r;
  out.terminal = t.terminal;
  // Walk forward for the n-step return.
  const Transition* last = &t;
  double discount = 1.0;
  for (size_t j = index + 1; out.steps < td_steps && !out.terminal && j < size_; ++j) {
    const Transition& next = AtLocked(j);
    if (next.episode_id != t.episode_id || next.step_index != last->step_index + 1) break;
    states.push_back(next.s);
    discount *= gamma;
    out.reward += discount * next.r;
    out.terminal = next.terminal;
    ++out.steps;
    last = &next;
  }
  states.push_back(last->s_next);
  size_t keep = std::min(states.size(), static_cast<size_t>(window));
  out.next_history.assign(states.end() - keep, states.end());
  return out;
}

ReplaySample ReplayPool::MakeSample(size_t index, int window, int td_steps,
                                    double gamma) const {
  std::lock_guard<std::mutex> lock(mu_);
  return MakeSampleLocked(index, window, td_steps, gamma);
}

std::vector<ReplaySample> ReplayPool::SampleBatch(size_t n, int window, Rng& rng,
                                                  int td_steps, double gamma) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (size_ == 0) throw DomainError("cannot sample an empty replay pool");
  std::uniform_int_distribution<size_t> pick(0, size_ - 1);
  std::vector<ReplaySample> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) out.push_back(MakeSampleLocked(pick(rng), window, td_steps, gamma));
  return out;
}

}  // namespace pegrl
