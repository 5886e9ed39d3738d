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

#ifndef PEGRL_CONTACT_SIM_H_
#define PEGRL_CONTACT_SIM_H_

// Quasi-static contact model of a cylindrical peg pressed against a plate
// with a tight-clearance hole. Lengths are in mm, angles in degrees, forces
// in N and moments in N*m unless a name says otherwise.

#include <cstdint>

#include "pegrl/common.h"

namespace pegrl {

struct HoleSpec {
  double diameter_mm = 35.0;
  // Diametral gap between hole and peg.
  double clearance_um = 10.0;
  double depth_mm = 20.0;
  // Plate tilt against the horizontal and the direction of the tilt axis in
  // the xy plane (0 = rotation about x).
  double tilt_deg = 0.0;
  double tilt_axis_deg = 0.0;
  // True hole center in robot coordinates and its (agent-unknown) deviation
  // from the nominal position at the origin.
  Vec2 center_xy_mm{0.0, 0.0};
  Vec2 center_error_xy_mm{0.0, 0.0};

  void Validate() const;

  double peg_diameter_mm() const { return diameter_mm - clearance_um * 1e-3; }
  double peg_radius_mm() const { return 0.5 * peg_diameter_mm(); }
  double radial_clearance_mm() const { return 0.5e-3 * clearance_um; }
  // Hole axis orientation as (R_x, R_y) in degrees.
  Vec2 axis_tilt_deg() const;
  // Plate height at a point, relative to the plate at the hole center.
  double SurfaceHeight(const Vec2& xy_mm) const;
};

struct PegPose {
  Vec2 xy_mm{0.0, 0.0};
  double z_mm = 0.0;
  Vec2 rot_xy_deg{0.0, 0.0};
  double depth_mm = 0.0;

  bool engaged() const { return depth_mm > 0.0; }
};

struct ContactWrench {
  Vec3 force_n{0.0, 0.0, 0.0};
  Vec2 moment_nm{0.0, 0.0};
};

struct ContactParams {
  double friction_mu = 0.2;
  // Lateral sliding speed per newton of net force, per 40 ms cycle.
  double mobility_mm_per_n_cycle = 0.00625;
  // Within this distance of the hole axis the peg rim rides into the hole
  // mouth and the plate guides the peg onto the axis.
  double capture_radius_mm = 0.25;
  // Rim-overlap moment: |M| = lever * max(0, f_z - onset) * profile(offset).
  double moment_lever_m = 0.012;
  double moment_onset_n = 9.0;
  // Depth the peg drops to when it enters the hole.
  double entry_depth_mm = 0.8;
  double insertion_mobility_mm_per_n_cycle = 0.03;
  // Wall friction reaction while sliding down the bore, as a fraction of f_z.
  double wall_friction_ratio = 0.2;
  double wall_moment_lever_m = 0.01;
  // Misalignment absorbed by wrist compliance before walls load the peg.
  double compliance_deg = 0.05;
  double cycle_s = 0.040;

  void Validate() const;
};

struct SensorParams {
  double force_noise_n = 0.05;
  double moment_noise_nm = 0.02;
  double position_noise_mm = 0.002;
  double force_resolution_n = 0.024;
  // Per-episode constant position bias is drawn from +-position_bias_mm.
  double position_bias_mm = 0.06;

  void Validate() const;
};

struct SensorSample {
  Vec3 force_n{0.0, 0.0, 0.0};
  Vec2 moment_nm{0.0, 0.0};
  Vec3 pos_mm{0.0, 0.0, 0.0};
};

// Rim-overlap moment for a peg whose axis sits at `offset_mm` from the hole
// axis, pressed down with `fz_n`. The returned (M_x, M_y) is the torque of
// the plate support about the peg axis, so (M_y, -M_x) points from the peg
// toward the hole. Zero once the axis is inside the clearance circle or the
// hole is no longer under the peg face.
Vec2 MomentField(const Vec2& offset_mm, double fz_n, const HoleSpec& hole,
                 const ContactParams& params);

// Largest peg/hole misalignment (deg) that still fits at `engaged_depth_mm`
// under two-point contact. 90 when any angle fits.
double JamAngleDeg(const HoleSpec& hole, double engaged_depth_mm);

// Deepest engagement (mm) reachable at misalignment `angle_deg`; infinite at 0.
double MaxEngagedDepth(const HoleSpec& hole, double angle_deg);

// True when the axis path from `from` to `to` passes within the radial
// clearance of the hole center.
bool PathEntersHole(const Vec2& from, const Vec2& to, const HoleSpec& hole);

struct SurfaceStep {
  PegPose pose;
  ContactWrench wrench;
  bool entered = false;
};

// Sliding on the plate under Coulomb friction; handles the entry event.
SurfaceStep SlideOnSurface(const PegPose& pose, const HoleSpec& hole,
                           const ContactParams& params, const Vec2& cmd_force_xy,
                           double cmd_fz, double dt_s);

PegPose StepSurface(const PegPose& pose, const HoleSpec& hole,
                    const ContactParams& params, const Vec2& cmd_force_xy,
                    double cmd_fz, double dt_s);

struct InsertionStep {
  PegPose pose;
  ContactWrench wrench;
  bool jammed = false;
};

// Pushing an engaged peg down the bore. `rot_increment_deg` is applied to the
// peg orientation unless the walls block it.
InsertionStep StepInsertion(const PegPose& pose, const HoleSpec& hole,
                            const ContactParams& params, double cmd_fz,
                            const Vec2& rot_increment_deg, double dt_s);

// Adds noise and bias to a ground-truth reading and snaps forces to the
// sensor resolution (round half away from zero).
SensorSample SensorRead(const ContactWrench& truth, const PegPose& pose,
                        const SensorParams& params, const Vec3& pos_bias_mm,
                        Rng& rng);

double QuantizeForce(double f_n, double resolution_n);

enum class StartMode : int { kSearch = 0, kEngaged = 1 };

struct ResetSpec {
  StartMode mode = StartMode::kSearch;
  double offset_mm = 1.0;
  // One of 16 directions, or -1 to draw one.
  int direction_index = -1;
  uint64_t seed = 0;
};

struct ResetInfo {
  Vec2 hole_center_xy_mm{0.0, 0.0};
};

struct EpisodeParams {
  double center_error_max_mm = 0.5;
  double peg_rot_jitter_deg = 0.3;
  double engaged_min_mm = 0.5;
  double engaged_max_mm = 1.0;
};

// Owns the ground-truth state of one peg/hole pair. Deterministic given the
// episode seed passed to Reset.
class ContactSimulator {
 public:
  ContactSimulator(const HoleSpec& hole, const ContactParams& contact,
                   const SensorParams& sensor, const EpisodeParams& episode);

  ResetInfo Reset(const ResetSpec& spec);

  // Advances the contact state by `dt_s` under a commanded force and
  // rotation increment.
  const ContactWrench& Advance(const Vec3& cmd_force_n,
                               const Vec2& rot_increment_deg, double dt_s);

  SensorSample Sense();

  const PegPose& pose() const { return pose_; }
  const HoleSpec& hole() const { return hole_; }
  const ContactWrench& wrench() const { return wrench_; }
  const ContactParams& contact_params() const { return contact_; }
  const SensorParams& sensor_params() const { return sensor_; }
  bool jammed() const { return jammed_; }

  // Test hooks.
  void set_pose(const PegPose& pose) { pose_ = pose; }
  void set_position_bias(const Vec3& bias) { pos_bias_ = bias; }

 private:
  HoleSpec base_hole_;
  HoleSpec hole_;
  ContactParams contact_;
  SensorParams sensor_;
  EpisodeParams episode_;
  PegPose pose_;
  ContactWrench wrench_;
  Vec3 pos_bias_{0.0, 0.0, 0.0};
  bool jammed_ = false;
  Rng rng_;
};

}  // namespace pegrl

#endif  // PEGRL_CONTACT_SIM_H_
