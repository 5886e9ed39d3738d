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

#include "pegrl/env.h"

#include <algorithm>
#include <cmath>

namespace pegrl {

void PhaseSpec::Validate() const {
  if (k_max <= 0) throw DomainError("k_max must be positive");
  if (d0_mm <= 0.0 || grid_c_mm <= 0.0 || safe_d_mm <= 0.0 || dz_entry_mm <= 0.0 ||
      z_goal_mm <= 0.0) {
    throw DomainError("phase lengths must be positive");
  }
  if (d0_mm >= safe_d_mm) throw DomainError("d0 must be inside the safe distance");
  if (grid_c_mm <= d0_mm) throw DomainError("grid constant must exceed d0");
}

PhaseSpec PhaseSpec::Search(double d0_mm, double grid_c_mm) {
  PhaseSpec s;
  s.phase = Phase::kSearch;
  s.k_max = 100;
  s.d0_mm = d0_mm;
  s.grid_c_mm = grid_c_mm;
  return s;
}

PhaseSpec PhaseSpec::Insertion() {
  PhaseSpec s;
  s.phase = Phase::kInsertion;
  s.k_max = 300;
  return s;
}

std::string ToString(TerminalKind kind) {
  switch (kind) {
    case TerminalKind::kSuccess: return "success";
    case TerminalKind::kTimeout: return "timeout";
    case TerminalKind::kSafetyAbort: return "safety_abort";
  }
  return "unknown";
}

double RoundToGrid(double p_mm, double c_mm) {
  if (!(c_mm > 0.0)) throw DomainError("RoundToGrid: c must be positive");
  double cells = std::floor(std::abs(p_mm) / c_mm);
  double r = cells * c_mm;
  return p_mm < 0.0 ? -r : r;
}

double RewardSuccess(int k, int k_max) {
  if (k <= 0) throw DomainError("RewardSuccess: the task cannot finish in zero steps");
  if (k >= k_max) throw DomainError("RewardSuccess: k must be below k_max");
  return 1.0 - static_cast<double>(k) / k_max;
}

double RewardSearchFail(double d_mm, double d0_mm, double safe_d_mm) {
  if (d_mm < 0.0 || d_mm > safe_d_mm) throw DomainError("RewardSearchFail: d outside [0, D]");
  if (d0_mm >= safe_d_mm) throw DomainError("RewardSearchFail: d0 must be below D");
  if (d_mm <= d0_mm) return 0.0;
  return -(d_mm - d0_mm) / (safe_d_mm - d0_mm);
}

double RewardInsertionFail(double z_mm, double z_goal_mm) {
  z_mm = std::clamp(z_mm, 0.0, z_goal_mm);
  return -(z_goal_mm - z_mm) / z_goal_mm;
}

ActionVector DecodeAction(Phase phase, int index, const ActionMagnitudes& mag) {
  ActionVector a;
  a.force_n[2] = -mag.fz_n;
  if (phase == Phase::kSearch) {
    switch (index) {
      case 0: a.force_n[0] = mag.fx_n; break;
      case 1: a.force_n[0] = -mag.fx_n; break;
      case 2: a.force_n[1] = mag.fy_n; break;
      case 3: a.force_n[1] = -mag.fy_n; break;
      default: throw DomainError("search action index must be in [0, 3]");
    }
    return a;
  }
  switch (index) {
    case 0: break;
    case 1: a.rot_xy[0] = mag.rot; break;
    case 2: a.rot_xy[0] = -mag.rot; break;
    case 3: a.rot_xy[1] = mag.rot; break;
    case 4: a.rot_xy[1] = -mag.rot; break;
    default: throw DomainError("insertion action index must be in [0, 4]");
  }
  return a;
}

std::optional<RewardRecord> CheckTerminal(const PhaseSpec& spec,
                                          const PhaseProgress& progress, int k) {
  if (spec.phase == Phase::kSearch) {
    if (progress.z_drop_mm >= spec.dz_entry_mm && k < spec.k_max) {
      return RewardRecord{RewardSuccess(k, spec.k_max), TerminalKind::kSuccess};
    }
    if (progress.lateral_distance_mm > spec.safe_d_mm) {
      return RewardRecord{-1.0, TerminalKind::kSafetyAbort};
    }
    if (k >= spec.k_max) {
      return RewardRecord{
          RewardSearchFail(progress.lateral_distance_mm, spec.d0_mm, spec.safe_d_mm),
          TerminalKind::kTimeout};
    }
    return std::nullopt;
  }
  if (progress.z_drop_mm >= spec.z_goal_mm && k < spec.k_max) {
    return RewardRecord{RewardSuccess(k, spec.k_max), TerminalKind::kSuccess};
  }
  if (k >= spec.k_max) {
    return RewardRecord{RewardInsertionFail(progress.z_drop_mm, spec.z_goal_mm),
                        TerminalKind::kTimeout};
  }
  return std::nullopt;
}

StateVector MakeState(const SensorFrame& frame, const PhaseSpec& spec) {
  if (spec.phase == Phase::kInsertion) {
    return {0.0, 0.0, frame.forces_n[2], frame.moments_nm[0], frame.moments_nm[1], 0.0, 0.0};
  }
  return {frame.forces_n[0],
          frame.forces_n[1],
          frame.forces_n[2],
          frame.moments_nm[0],
          frame.moments_nm[1],
          RoundToGrid(frame.pos_mm[0], spec.grid_c_mm),
          RoundToGrid(frame.pos_mm[1], spec.grid_c_mm)};
}

PegEnvironment::PegEnvironment(RobotLink& link, const PhaseSpec& spec,
                               const ActionMagnitudes& magnitudes)
    : link_(link), spec_(spec), magnitudes_(magnitudes) {
  spec_.Validate();
}

StateVector PegEnvironment::Reset(uint64_t episode_seed) {
  ResetSpec r;
  r.mode = start_mode_;
  r.offset_mm = spec_.d0_mm;
  r.direction_index = direction_;
  r.seed = episode_seed;
  return ResetWith(r);
}

StateVector PegEnvironment::ResetWith(const ResetSpec& reset) {
  ResetInfo info = link_.Reset(reset);
  hole_xy_ = info.hole_center_xy_mm;
  return Continue(spec_, link_.Poll());
}

StateVector PegEnvironment::Continue(const PhaseSpec& spec, const SensorFrame& current) {
  spec.Validate();
  spec_ = spec;
  frame_ = current;
  start_z_ = spec.phase == Phase::kInsertion ? 0.0 : current.pos_mm[2];
  k_ = 0;
  return MakeState(frame_, spec_);
}

PhaseProgress PegEnvironment::progress() const {
  PhaseProgress p;
  p.z_drop_mm = start_z_ - frame_.pos_mm[2];
  p.lateral_distance_mm =
      Norm(Sub({frame_.pos_mm[0], frame_.pos_mm[1]}, hole_xy_));
  return p;
}

StepOutcome PegEnvironment::Step(int action) {
  link_.Submit(DecodeAction(spec_.phase, action, magnitudes_));
  frame_ = link_.Poll();
  ++k_;
  StepOutcome out;
  out.next = MakeState(frame_, spec_);
  if (auto end = CheckTerminal(spec_, progress(), k_)) {
    out.reward = end->value;
    out.terminal = true;
    out.kind = end->terminal_kind;
  }
  return out;
}

}  // namespace pegrl
