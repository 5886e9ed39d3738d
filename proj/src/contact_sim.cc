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

#include "pegrl/contact_sim.h"

#include <algorithm>
#include <limits>
#include <string>

namespace pegrl {
namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

// Misalignment between peg axis and hole axis, (R_x, R_y) in degrees.
Vec2 Misalignment(const PegPose& pose, const HoleSpec& hole) {
  return Sub(pose.rot_xy_deg, hole.axis_tilt_deg());
}

double EffectiveMisalignment(const Vec2& mis, const ContactParams& params) {
  return std::max(0.0, Norm(mis) - params.compliance_deg);
}

ContactWrench BoreWrench(const Vec2& mis, double eff_deg, double reaction_n,
                         const ContactParams& params) {
  ContactWrench w;
  w.force_n = {0.0, 0.0, reaction_n};
  if (eff_deg > 0.0 && reaction_n > 0.0) {
    double m = params.wall_moment_lever_m * reaction_n / Norm(mis);
    w.moment_nm = {-m * mis[0], -m * mis[1]};
  }
  return w;
}

}  // namespace

void HoleSpec::Validate() const {
  Require(diameter_mm > 0.0, "hole diameter must be positive");
  Require(clearance_um > 0.0, "clearance must be positive");
  Require(clearance_um * 1e-3 < diameter_mm, "clearance exceeds diameter");
  Require(depth_mm > 0.0, "hole depth must be positive");
  Require(std::abs(tilt_deg) < 5.0, "plate tilt must stay below 5 deg");
}

Vec2 HoleSpec::axis_tilt_deg() const {
  double a = DegToRad(tilt_axis_deg);
  return {tilt_deg * std::cos(a), tilt_deg * std::sin(a)};
}

double HoleSpec::SurfaceHeight(const Vec2& xy_mm) const {
  Vec2 t = axis_tilt_deg();
  Vec2 rel = Sub(xy_mm, center_xy_mm);
  // Rotation about y lowers +x, rotation about x raises +y.
  return -std::tan(DegToRad(t[1])) * rel[0] + std::tan(DegToRad(t[0])) * rel[1];
}

void ContactParams::Validate() const {
  Require(friction_mu >= 0.0, "friction_mu must be non-negative");
  Require(mobility_mm_per_n_cycle > 0.0, "mobility must be positive");
  Require(capture_radius_mm >= 0.0, "capture radius must be non-negative");
  Require(moment_lever_m >= 0.0, "moment lever must be non-negative");
  Require(moment_onset_n >= 0.0, "moment onset must be non-negative");
  Require(entry_depth_mm > 0.0, "entry depth must be positive");
  Require(insertion_mobility_mm_per_n_cycle > 0.0,
          "insertion mobility must be positive");
  Require(wall_friction_ratio >= 0.0 && wall_friction_ratio < 1.0,
          "wall friction ratio must be in [0, 1)");
  Require(compliance_deg >= 0.0, "compliance must be non-negative");
  Require(cycle_s > 0.0, "cycle period must be positive");
}

void SensorParams::Validate() const {
  Require(force_noise_n >= 0.0 && moment_noise_nm >= 0.0 &&
              position_noise_mm >= 0.0,
          "sensor noise must be non-negative");
  Require(force_resolution_n > 0.0, "force resolution must be positive");
  Require(position_bias_mm >= 0.0, "position bias must be non-negative");
}

Vec2 MomentField(const Vec2& offset_mm, double fz_n, const HoleSpec& hole,
                 const ContactParams& params) {
  if (fz_n < 0.0) throw DomainError("MomentField: negative f_z");
  double d = Norm(offset_mm);
  double hole_radius = 0.5 * hole.diameter_mm;
  if (d <= hole.radial_clearance_mm() || d >= hole_radius) return {0.0, 0.0};
  double load = std::max(0.0, fz_n - params.moment_onset_n);
  double profile = (1.0 - d / hole_radius) * (1.0 - d / hole_radius);
  double mag = params.moment_lever_m * load * profile;
  // Support centroid lies on the far side of the peg from the hole.
  return {mag * offset_mm[1] / d, -mag * offset_mm[0] / d};
}

double JamAngleDeg(const HoleSpec& hole, double engaged_depth_mm) {
  if (engaged_depth_mm < 0.0) throw DomainError("JamAngleDeg: negative depth");
  double dp = hole.peg_diameter_mm();
  double dh = hole.diameter_mm;
  double rho = std::hypot(dp, engaged_depth_mm);
  if (rho <= dh) return 90.0;
  // dp*cos(t) + l*sin(t) = rho*cos(t - phi) = dh, smaller root.
  double phi = std::atan2(engaged_depth_mm, dp);
  return RadToDeg(phi - std::acos(dh / rho));
}

double MaxEngagedDepth(const HoleSpec& hole, double angle_deg) {
  double t = DegToRad(std::abs(angle_deg));
  if (t == 0.0) return std::numeric_limits<double>::infinity();
  if (t >= M_PI / 2) return 0.0;
  double width = hole.diameter_mm - hole.peg_diameter_mm() * std::cos(t);
  return std::max(0.0, width / std::sin(t));
}

bool PathEntersHole(const Vec2& from, const Vec2& to, const HoleSpec& hole) {
  Vec2 seg = Sub(to, from);
  Vec2 rel = Sub(hole.center_xy_mm, from);
  double len2 = seg[0] * seg[0] + seg[1] * seg[1];
  double t = len2 > 0.0 ? (rel[0] * seg[0] + rel[1] * seg[1]) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  Vec2 closest = Add(from, Scale(seg, t));
  return Norm(Sub(closest, hole.center_xy_mm)) <= hole.radial_clearance_mm();
}

SurfaceStep SlideOnSurface(const PegPose& pose, const HoleSpec& hole,
                           const ContactParams& params, const Vec2& cmd_force_xy,
                           double cmd_fz, double dt_s) {
  if (dt_s <= 0.0) throw DomainError("StepSurface: dt must be positive");
  if (pose.engaged()) throw DomainError("StepSurface: peg is in the hole");

  SurfaceStep out;
  out.pose = pose;
  const Vec2 center = hole.center_xy_mm;
  const double fz = std::max(0.0, cmd_fz);
  const double per_newton = params.mobility_mm_per_n_cycle * dt_s / params.cycle_s;

  Vec2 next = pose.xy_mm;
  Vec2 friction{0.0, 0.0};
  Vec2 offset = Sub(pose.xy_mm, center);
  double dist = Norm(offset);

  if (fz > 0.0 && dist > hole.radial_clearance_mm()) {
    if (dist < params.capture_radius_mm) {
      // Rim in the hole mouth: the load drives the peg onto the axis.
      double step = std::min(dist, per_newton * fz * (1.0 - params.friction_mu));
      Vec2 dir = Scale(offset, -1.0 / dist);
      next = Add(pose.xy_mm, Scale(dir, step));
      friction = Scale(dir, -params.friction_mu * fz);
    } else {
      Vec2 t = hole.axis_tilt_deg();
      Vec2 slope{fz * std::sin(DegToRad(t[1])), -fz * std::sin(DegToRad(t[0]))};
      Vec2 net = Add(cmd_force_xy, slope);
      double mag = Norm(net);
      double limit = params.friction_mu * fz;
      if (mag <= limit) {
        friction = Scale(net, -1.0);
      } else {
        Vec2 dir = Scale(net, 1.0 / mag);
        next = Add(pose.xy_mm, Scale(dir, per_newton * (mag - limit)));
        friction = Scale(dir, -limit);
      }
    }
  }

  if (PathEntersHole(pose.xy_mm, next, hole)) {
    // Snap to the closest point of the path; it lies in the clearance circle.
    Vec2 seg = Sub(next, pose.xy_mm);
    double len2 = seg[0] * seg[0] + seg[1] * seg[1];
    double t = 0.0;
    if (len2 > 0.0) {
      Vec2 rel = Sub(center, pose.xy_mm);
      t = std::clamp((rel[0] * seg[0] + rel[1] * seg[1]) / len2, 0.0, 1.0);
    }
    out.pose.xy_mm = Add(pose.xy_mm, Scale(seg, t));
    Vec2 mis = Misalignment(pose, hole);
    double eff = EffectiveMisalignment(mis, params);
    double limit = std::min(MaxEngagedDepth(hole, eff), hole.depth_mm);
    out.pose.depth_mm = std::min(params.entry_depth_mm, limit);
    out.pose.z_mm = -out.pose.depth_mm;
    out.entered = out.pose.depth_mm > 0.0;
    bool wedged = params.entry_depth_mm > limit;
    double reaction = wedged ? fz : params.wall_friction_ratio * fz;
    out.wrench = BoreWrench(mis, eff, reaction, params);
    return out;
  }

  out.pose.xy_mm = next;
  out.pose.z_mm = hole.SurfaceHeight(next);
  if (fz > 0.0) {
    out.wrench.force_n = {friction[0], friction[1], fz};
    out.wrench.moment_nm = MomentField(Sub(next, center), fz, hole, params);
  }
  return out;
}

PegPose StepSurface(const PegPose& pose, const HoleSpec& hole,
                    const ContactParams& params, const Vec2& cmd_force_xy,
                    double cmd_fz, double dt_s) {
  return SlideOnSurface(pose, hole, params, cmd_force_xy, cmd_fz, dt_s).pose;
}

InsertionStep StepInsertion(const PegPose& pose, const HoleSpec& hole,
                            const ContactParams& params, double cmd_fz,
                            const Vec2& rot_increment_deg, double dt_s) {
  if (dt_s <= 0.0) throw DomainError("StepInsertion: dt must be positive");
  if (!pose.engaged()) throw DomainError("StepInsertion: peg is not engaged");

  InsertionStep out;
  out.pose = pose;

  // Walls block rotations that would open the misalignment past the wedge
  // angle at the current depth; rotations toward alignment always pass.
  PegPose rotated = pose;
  rotated.rot_xy_deg = Add(pose.rot_xy_deg, rot_increment_deg);
  double eff_now = EffectiveMisalignment(Misalignment(pose, hole), params);
  double eff_next = EffectiveMisalignment(Misalignment(rotated, hole), params);
  if (eff_next <= eff_now || eff_next <= JamAngleDeg(hole, pose.depth_mm)) {
    out.pose.rot_xy_deg = rotated.rot_xy_deg;
  }

  Vec2 mis = Misalignment(out.pose, hole);
  double eff = EffectiveMisalignment(mis, params);
  double fz = std::max(0.0, cmd_fz);
  if (fz == 0.0) return out;

  double wedge_limit = MaxEngagedDepth(hole, eff);
  double limit = std::min(wedge_limit, hole.depth_mm);
  double want = pose.depth_mm + params.insertion_mobility_mm_per_n_cycle * fz *
                                    (1.0 - params.wall_friction_ratio) * dt_s /
                                    params.cycle_s;
  bool blocked = want >= limit;
  out.pose.depth_mm = blocked ? std::max(pose.depth_mm, limit) : want;
  out.jammed = blocked && wedge_limit < hole.depth_mm;
  out.pose.z_mm = -out.pose.depth_mm;
  double reaction = blocked ? fz : params.wall_friction_ratio * fz;
  out.wrench = BoreWrench(mis, eff, reaction, params);
  return out;
}

double QuantizeForce(double f_n, double resolution_n) {
  return std::round(f_n / resolution_n) * resolution_n;
}

SensorSample SensorRead(const ContactWrench& truth, const PegPose& pose,
                        const SensorParams& params, const Vec3& pos_bias_mm,
                        Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  auto noisy = [&](double v, double sigma) {
    return sigma > 0.0 ? v + sigma * unit(rng) : v;
  };
  SensorSample s;
  for (int i = 0; i < 3; ++i) {
    s.force_n[i] = QuantizeForce(noisy(truth.force_n[i], params.force_noise_n),
                                 params.force_resolution_n);
  }
  for (int i = 0; i < 2; ++i) {
    s.moment_nm[i] = noisy(truth.moment_nm[i], params.moment_noise_nm);
  }
  Vec3 pos{pose.xy_mm[0], pose.xy_mm[1], pose.z_mm};
  for (int i = 0; i < 3; ++i) {
    s.pos_mm[i] = noisy(pos[i] + pos_bias_mm[i], params.position_noise_mm);
  }
  return s;
}

ContactSimulator::ContactSimulator(const HoleSpec& hole,
                                   const ContactParams& contact,
                                   const SensorParams& sensor,
                                   const EpisodeParams& episode)
    : base_hole_(hole),
      hole_(hole),
      contact_(contact),
      sensor_(sensor),
      episode_(episode) {
  hole.Validate();
  contact.Validate();
  sensor.Validate();
  pose_.z_mm = hole_.SurfaceHeight(pose_.xy_mm);
}

ResetInfo ContactSimulator::Reset(const ResetSpec& spec) {
  if (spec.offset_mm < 0.0) throw DomainError("Reset: negative offset");
  if (spec.direction_index < -1 || spec.direction_index > 15) {
    throw DomainError("Reset: direction index must be in [-1, 15]");
  }
  rng_.seed(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto sym = [&](double half) { return half * (2.0 * u01(rng_) - 1.0); };

  hole_ = base_hole_;
  hole_.center_error_xy_mm = {sym(episode_.center_error_max_mm),
                              sym(episode_.center_error_max_mm)};
  hole_.center_xy_mm = Add(base_hole_.center_xy_mm, hole_.center_error_xy_mm);

  for (double& b : pos_bias_) b = sym(sensor_.position_bias_mm);

  double jitter_r = episode_.peg_rot_jitter_deg * std::sqrt(u01(rng_));
  double jitter_a = 2.0 * M_PI * u01(rng_);
  int direction = spec.direction_index;
  int drawn = std::uniform_int_distribution<int>(0, 15)(rng_);
  if (direction < 0) direction = drawn;
  double engaged_u = u01(rng_);

  pose_ = PegPose{};
  pose_.rot_xy_deg = {jitter_r * std::cos(jitter_a), jitter_r * std::sin(jitter_a)};
  if (spec.mode == StartMode::kSearch) {
    double a = 2.0 * M_PI * direction / 16.0;
    pose_.xy_mm = Add(hole_.center_xy_mm,
                      {spec.offset_mm * std::cos(a), spec.offset_mm * std::sin(a)});
    pose_.z_mm = hole_.SurfaceHeight(pose_.xy_mm);
  } else {
    pose_.xy_mm = hole_.center_xy_mm;
    double eff = EffectiveMisalignment(Misalignment(pose_, hole_), contact_);
    double depth = episode_.engaged_min_mm +
                   engaged_u * (episode_.engaged_max_mm - episode_.engaged_min_mm);
    pose_.depth_mm = std::min({depth, MaxEngagedDepth(hole_, eff), hole_.depth_mm});
    pose_.z_mm = -pose_.depth_mm;
  }
  wrench_ = ContactWrench{};
  jammed_ = false;
  return ResetInfo{hole_.center_xy_mm};
}

const ContactWrench& ContactSimulator::Advance(const Vec3& cmd_force_n,
                                               const Vec2& rot_increment_deg,
                                               double dt_s) {
  // The action vector commands -F_z to press down.
  double fz = -cmd_force_n[2];
  if (!pose_.engaged()) {
    SurfaceStep s = SlideOnSurface(pose_, hole_, contact_,
                                   {cmd_force_n[0], cmd_force_n[1]}, fz, dt_s);
    pose_ = s.pose;
    if (!s.entered) pose_.rot_xy_deg = Add(pose_.rot_xy_deg, rot_increment_deg);
    wrench_ = s.wrench;
    jammed_ = false;
  } else {
    InsertionStep s = StepInsertion(pose_, hole_, contact_, fz, rot_increment_deg, dt_s);
    pose_ = s.pose;
    wrench_ = s.wrench;
    jammed_ = s.jammed;
  }
  return wrench_;
}

SensorSample ContactSimulator::Sense() {
  return SensorRead(wrench_, pose_, sensor_, pos_bias_, rng_);
}

}  // namespace pegrl
