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

#ifndef PEGRL_ENV_H_
#define PEGRL_ENV_H_

#include <array>
#include <optional>
#include <string>

#include "pegrl/controller.h"
#include "pegrl/robot_service.h"

namespace pegrl {

// [F_x, F_y, F_z, M_x, M_y, P~_x, P~_y]
inline constexpr int kStateDim = 7;
using StateVector = std::array<double, kStateDim>;

enum class Phase { kSearch, kInsertion };

inline constexpr int kSearchActions = 4;
inline constexpr int kInsertionActions = 5;

struct PhaseSpec {
  Phase phase = Phase::kSearch;
  int k_max = 100;
  double d0_mm = 1.0;
  double grid_c_mm = 3.0;
  double safe_d_mm = 10.0;
  double dz_entry_mm = 0.5;
  double z_goal_mm = 19.0;

  int num_actions() const {
    return phase == Phase::kSearch ? kSearchActions : kInsertionActions;
  }
  void Validate() const;

  static PhaseSpec Search(double d0_mm, double grid_c_mm);
  static PhaseSpec Insertion();
};

enum class TerminalKind { kSuccess, kTimeout, kSafetyAbort };

std::string ToString(TerminalKind kind);

struct RewardRecord {
  double value = 0.0;
  TerminalKind terminal_kind = TerminalKind::kTimeout;
};

// sign(p) * c * floor(|p| / c).
double RoundToGrid(double p_mm, double c_mm);

// 1 - k / k_max for a success at step k (1 <= k < k_max).
double RewardSuccess(int k, int k_max);

// Search penalty by final distance d from the hole center.
double RewardSearchFail(double d_mm, double d0_mm, double safe_d_mm);

// Insertion penalty by the depth z reached out of goal depth Z.
double RewardInsertionFail(double z_mm, double z_goal_mm);

struct ActionMagnitudes {
  double fx_n = 20.0;
  double fy_n = 20.0;
  double fz_n = 20.0;
  // Rotation entries only carry a direction; the controller sets the step.
  double rot = 1.0;
};

ActionVector DecodeAction(Phase phase, int index, const ActionMagnitudes& mag = {});

// Progress measured from sensor frames. Search drops count from the phase
// start; insertion depth counts from the plate surface (z = 0).
struct PhaseProgress {
  double z_drop_mm = 0.0;
  double lateral_distance_mm = 0.0;
};

// Returns the episode-ending reward when step `k` ends the phase.
std::optional<RewardRecord> CheckTerminal(const PhaseSpec& spec,
                                          const PhaseProgress& progress, int k);

// Builds the agent state; insertion keeps only F_z, M_x, M_y.
StateVector MakeState(const SensorFrame& frame, const PhaseSpec& spec);

struct StepOutcome {
  StateVector next{};
  double reward = 0.0;
  // Episode ended with a final reward (no bootstrap past it).
  bool terminal = false;
  // Episode ended without a terminal reward (bootstrap past it).
  bool truncated = false;
  std::optional<TerminalKind> kind;
};

// Episode-level interface consumed by the training loop.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int num_actions() const = 0;
  virtual StateVector Reset(uint64_t episode_seed) = 0;
  virtual StepOutcome Step(int action) = 0;
};

// One phase of the peg-in-hole task on a robot link. Holds the per-episode
// state: step counter, reference height and hole position.
class PegEnvironment : public Environment {
 public:
  PegEnvironment(RobotLink& link, const PhaseSpec& spec,
                 const ActionMagnitudes& magnitudes = {});

  int num_actions() const override { return spec_.num_actions(); }

  // Resets the robot with the given start mode and starts a phase.
  StateVector Reset(uint64_t episode_seed) override;
  StateVector ResetWith(const ResetSpec& reset);

  // Starts a phase from the robot's current condition, without a reset.
  StateVector Continue(const PhaseSpec& spec, const SensorFrame& current);

  StepOutcome Step(int action) override;

  const SensorFrame& last_frame() const { return frame_; }
  const PhaseSpec& spec() const { return spec_; }
  int steps() const { return k_; }
  PhaseProgress progress() const;

  void set_start_mode(StartMode mode) { start_mode_ = mode; }
  void set_direction(int direction_index) { direction_ = direction_index; }

 private:
  RobotLink& link_;
  PhaseSpec spec_;
  ActionMagnitudes magnitudes_;
  StartMode start_mode_ = StartMode::kSearch;
  int direction_ = -1;
  Vec2 hole_xy_{0.0, 0.0};
  double start_z_ = 0.0;
  SensorFrame frame_;
  int k_ = 0;
};

}  // namespace pegrl

#endif  // PEGRL_ENV_H_
