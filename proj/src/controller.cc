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

#include "pegrl/controller.h"

#include <chrono>
#include <string>
#include <thread>

namespace pegrl {

std::array<double, ActionVector::kSize> ActionVector::ToArray() const {
  return {force_n[0], force_n[1], force_n[2], rot_xy[0], rot_xy[1]};
}

ActionVector ActionVector::FromSpan(std::span<const double> values) {
  if (values.size() != kSize) {
    throw ProtocolError("action vector must have 5 components, got " +
                        std::to_string(values.size()));
  }
  ActionVector a;
  a.force_n = {values[0], values[1], values[2]};
  a.rot_xy = {values[3], values[4]};
  return a;
}

void ControllerParams::Validate() const {
  if (sample_period_s <= 0.0) throw DomainError("sample period must be positive");
  if (rot_increment_deg < 0.0) throw DomainError("rotation increment must be >= 0");
  if (hold_force_n < 0.0) throw DomainError("hold force must be >= 0");
}

SensorFrame AverageSamples(std::span<const SensorSample> samples, int64_t cycle_index) {
  SensorFrame f;
  f.sample_count = static_cast<int>(samples.size());
  f.cycle_index = cycle_index;
  if (samples.empty()) return f;
  for (const SensorSample& s : samples) {
    for (int i = 0; i < 3; ++i) f.forces_n[i] += s.force_n[i];
    for (int i = 0; i < 2; ++i) f.moments_nm[i] += s.moment_nm[i];
    for (int i = 0; i < 3; ++i) f.pos_mm[i] += s.pos_mm[i];
  }
  double n = static_cast<double>(samples.size());
  for (double& v : f.forces_n) v /= n;
  for (double& v : f.moments_nm) v /= n;
  for (double& v : f.pos_mm) v /= n;
  return f;
}

Controller::Controller(ContactSimulator sim, const ControllerParams& params)
    : sim_(std::move(sim)), params_(params) {
  params_.Validate();
}

ResetInfo Controller::Reset(const ResetSpec& spec) {
  ResetInfo info = sim_.Reset(spec);
  ActionVector hold;
  hold.force_n = {0.0, 0.0, -params_.hold_force_n};
  pending_ = latched_ = active_ = hold;
  cycle_ = 0;
  initialized_ = true;
  return info;
}

Acknowledgement Controller::SubmitAction(const ActionVector& action) {
  if (!initialized_) throw StartupError("controller not initialized");
  pending_ = action;
  return {++acks_, cycle_};
}

Acknowledgement Controller::SubmitAction(std::span<const double> values) {
  return SubmitAction(ActionVector::FromSpan(values));
}

SensorFrame Controller::Poll() {
  if (!initialized_) throw StartupError("poll before the controller produced samples");
  auto start = std::chrono::steady_clock::now();
  active_ = latched_;
  latched_ = pending_;
  ExecuteCycle(active_);
  ++cycle_;
  if (params_.realtime) {
    auto period = std::chrono::duration<double>(params_.sample_period_s *
                                                ControllerParams::kSamplesPerCycle);
    std::this_thread::sleep_until(
        start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period));
  }
  return AverageSamples(samples_, cycle_);
}

void Controller::ExecuteCycle(const ActionVector& action) {
  const double step = params_.rot_increment_deg / ControllerParams::kSamplesPerCycle;
  auto direction = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  Vec2 rot{step * direction(action.rot_xy[0]), step * direction(action.rot_xy[1])};
  for (SensorSample& sample : samples_) {
    sim_.Advance(action.force_n, rot, params_.sample_period_s);
    sample = sim_.Sense();
  }
}

}  // namespace pegrl
