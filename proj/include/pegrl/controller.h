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

#ifndef PEGRL_CONTROLLER_H_
#define PEGRL_CONTROLLER_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "pegrl/common.h"
#include "pegrl/contact_sim.h"

namespace pegrl {

// Command to the hybrid position/force controller: desired force and the
// direction of the desired rotation increment about x and y.
struct ActionVector {
  Vec3 force_n{0.0, 0.0, 0.0};
  Vec2 rot_xy{0.0, 0.0};

  static constexpr int kSize = 5;
  std::array<double, kSize> ToArray() const;
  // Throws ProtocolError unless `values` has exactly five entries.
  static ActionVector FromSpan(std::span<const double> values);

  bool operator==(const ActionVector&) const = default;
};

struct SensorFrame {
  Vec3 forces_n{0.0, 0.0, 0.0};
  Vec2 moments_nm{0.0, 0.0};
  Vec3 pos_mm{0.0, 0.0, 0.0};
  int sample_count = 0;
  int64_t cycle_index = 0;

  bool operator==(const SensorFrame&) const = default;
};

struct ControllerParams {
  static constexpr int kSamplesPerCycle = 20;
  double sample_period_s = 0.002;
  // Rotation applied per cycle while a rotation command is active.
  double rot_increment_deg = 0.05;
  // Force holding the peg on the plate between reset and the first action.
  double hold_force_n = 20.0;
  // Sleep so that a cycle takes 40 ms of wall-clock time.
  bool realtime = false;

  void Validate() const;
};

// Arithmetic mean of the samples in acquisition order.
SensorFrame AverageSamples(std::span<const SensorSample> samples, int64_t cycle_index);

struct Acknowledgement {
  uint64_t count = 0;
  int64_t cycle_index = 0;
};

// Emulates the robot controller: actions are latched and become active one
// cycle later, so the effect of an action submitted after frame t is first
// visible in frame t+2. Each poll runs one 40 ms cycle of twenty 2 ms samples.
class Controller {
 public:
  Controller(ContactSimulator sim, const ControllerParams& params);

  ResetInfo Reset(const ResetSpec& spec);

  Acknowledgement SubmitAction(const ActionVector& action);
  Acknowledgement SubmitAction(std::span<const double> values);

  // Throws StartupError before the first Reset.
  SensorFrame Poll();

  int64_t cycle() const { return cycle_; }
  const ActionVector& pending() const { return pending_; }
  const ActionVector& latched() const { return latched_; }
  const ActionVector& active() const { return active_; }
  const std::array<SensorSample, ControllerParams::kSamplesPerCycle>& last_samples() const {
    return samples_;
  }
  const ContactSimulator& sim() const { return sim_; }
  ContactSimulator& mutable_sim() { return sim_; }
  const ControllerParams& params() const { return params_; }

 private:
  void ExecuteCycle(const ActionVector& action);

  ContactSimulator sim_;
  ControllerParams params_;
  bool initialized_ = false;
  int64_t cycle_ = 0;
  uint64_t acks_ = 0;
  ActionVector pending_;
  ActionVector latched_;
  ActionVector active_;
  std::array<SensorSample, ControllerParams::kSamplesPerCycle> samples_{};
};

}  // namespace pegrl

#endif  // PEGRL_CONTROLLER_H_
