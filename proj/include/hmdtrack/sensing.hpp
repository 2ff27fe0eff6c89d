// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/motion.hpp"
#include "hmdtrack/rotmath.hpp"
#include "hmdtrack/skeleton.hpp"

namespace hmdtrack {

// The eight input components, in wire order.
enum Component : int {
  kHead = 0,
  kLeftHand = 1,
  kRightHand = 2,
  kPelvisImu = 3,
  kLeftLegImu = 4,
  kRightLegImu = 5,
  kLeftHandRel = 6,
  kRightHandRel = 7,
};

inline constexpr int kNumComponents = 8;
inline constexpr int kInputDim = 135;

// Start offset of each component block; blocks end at the next entry.
inline constexpr std::array<int, kNumComponents + 1> kComponentOffsets = {
    0, 18, 36, 54, 69, 84, 99, 117, 135};

inline constexpr int component_offset(int c) { return kComponentOffsets[c]; }
inline constexpr int component_dim(int c) {
  return kComponentOffsets[c + 1] - kComponentOffsets[c];
}

enum class ScenarioTag { kHmd, kHmd2Imus, kHmd3Imus };

struct Scenario {
  ScenarioTag tag = ScenarioTag::kHmd;
  std::array<bool, kNumComponents> present{};

  static Scenario make(ScenarioTag tag) {
    Scenario s;
    s.tag = tag;
    s.present = {true, true, true, false, false, false, true, true};
    if (tag == ScenarioTag::kHmd2Imus || tag == ScenarioTag::kHmd3Imus) {
      s.present[kLeftLegImu] = true;
      s.present[kRightLegImu] = true;
    }
    if (tag == ScenarioTag::kHmd3Imus) s.present[kPelvisImu] = true;
    return s;
  }
};

inline const char* scenario_name(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::kHmd: return "hmd";
    case ScenarioTag::kHmd2Imus: return "hmd2imus";
    case ScenarioTag::kHmd3Imus: return "hmd3imus";
  }
  return "hmd";
}

inline Scenario parse_scenario(const std::string& name) {
  if (name == "hmd") return Scenario::make(ScenarioTag::kHmd);
  if (name == "hmd2imus") return Scenario::make(ScenarioTag::kHmd2Imus);
  if (name == "hmd3imus") return Scenario::make(ScenarioTag::kHmd3Imus);
  throw ParseError("unknown scenario '" + name + "'");
}

struct DevicePose {
  Vec3 position;
  Mat3 rotation;
  double timestamp = 0.0;
};

// Calibrated inertial sample: orientation and free acceleration in the
// common body-centric frame.
struct ImuSample {
  Mat3 rotation;
  Vec3 acceleration;
  double timestamp = 0.0;
};

// The assembled per-frame observation vector. Absent components are exactly
// zero in x and false in mask. 18-dim blocks hold [position, linear
// velocity, rotation 6D, angular velocity 6D]; 15-dim blocks hold
// [rotation 6D, angular velocity 6D, acceleration].
struct FrameInput {
  std::array<float, kInputDim> x{};
  std::array<bool, kNumComponents> mask{};
  std::int64_t frame_index = 0;
  double dt = 1.0 / 60.0;
};

inline void validate_frame_input(const FrameInput& f) {
  for (int c = 0; c < kNumComponents; ++c) {
    if (f.mask[c]) continue;
    for (int i = component_offset(c); i < component_offset(c + 1); ++i)
      if (f.x[i] != 0.0f)
        throw DegenerateInput("nonzero value in masked-absent component " +
                              std::to_string(c));
  }
  for (float v : f.x)
    if (!std::isfinite(v)) throw DegenerateInput("non-finite input value");
}

// Linear velocity plus the per-frame relative-rotation 6D encoding of the
// angular motion between two device poses.
struct VelocityPair {
  Vec3 linear;
  Rot6d angular;
};

inline VelocityPair velocity_and_angular(const DevicePose& prev,
                                         const DevicePose& cur) {
  const double dt = cur.timestamp - prev.timestamp;
  if (dt <= 0.0) throw NonMonotonicTime("device timestamps must increase");
  return {(cur.position - prev.position) / dt,
          matrix_to_rot6d(relative_rotation(prev.rotation, cur.rotation))};
}

namespace detail {

inline void write_vec3(float* dst, const Vec3& v) {
  dst[0] = static_cast<float>(v.x);
  dst[1] = static_cast<float>(v.y);
  dst[2] = static_cast<float>(v.z);
}

inline void write_rot6d(float* dst, const Rot6d& r) {
  for (int i = 0; i < 6; ++i) dst[i] = static_cast<float>(r[i]);
}

// [position, linear velocity, rotation 6D, angular velocity 6D]
inline void write_pose_block(float* dst, const Vec3& pos, const Vec3& vel,
                             const Mat3& rot, const Rot6d& angvel) {
  write_vec3(dst, pos);
  write_vec3(dst + 3, vel);
  write_rot6d(dst + 6, matrix_to_rot6d(rot));
  write_rot6d(dst + 12, angvel);
}

// [rotation 6D, angular velocity 6D, acceleration]
inline void write_imu_block(float* dst, const Mat3& rot, const Rot6d& angvel,
                            const Vec3& acc) {
  write_rot6d(dst, matrix_to_rot6d(rot));
  write_rot6d(dst + 6, angvel);
  write_vec3(dst + 12, acc);
}

} // namespace detail

// Hand pose expressed in the head frame, with velocity entries from
// frame-to-frame differences of the relative quantities. Feeds the 18-dim
// relative-hand blocks.
inline std::array<double, 18> relative_hand_in_head(const DevicePose& head,
                                                    const DevicePose& hand,
                                                    const DevicePose& prev_head,
                                                    const DevicePose& prev_hand) {
  const double dt = head.timestamp - prev_head.timestamp;
  if (dt <= 0.0) throw NonMonotonicTime("device timestamps must increase");
  const Vec3 rel_pos = head.rotation.transposed() * (hand.position - head.position);
  const Mat3 rel_rot = relative_rotation(head.rotation, hand.rotation);
  const Vec3 prev_pos =
      prev_head.rotation.transposed() * (prev_hand.position - prev_head.position);
  const Mat3 prev_rot = relative_rotation(prev_head.rotation, prev_hand.rotation);
  const Vec3 vel = (rel_pos - prev_pos) / dt;
  const Rot6d angvel = matrix_to_rot6d(relative_rotation(prev_rot, rel_rot));

  std::array<double, 18> out{};
  const Rot6d rot6 = matrix_to_rot6d(rel_rot);
  for (int i = 0; i < 3; ++i) out[i] = rel_pos[i];
  for (int i = 0; i < 3; ++i) out[3 + i] = vel[i];
  for (int i = 0; i < 6; ++i) out[6 + i] = rot6[i];
  for (int i = 0; i < 6; ++i) out[12 + i] = angvel[i];
  return out;
}

// One time step of every device observation, already calibrated into the
// common frame. IMU slots are optional per scenario.
struct DeviceFrame {
  DevicePose head;
  DevicePose left_hand;
  DevicePose right_hand;
  std::optional<ImuSample> pelvis;
  std::optional<ImuSample> left_leg;
  std::optional<ImuSample> right_leg;
};

// Assembles the 135-dim observation vector. prev == nullptr means a stream
// cold start: linear velocities and accelerations read zero, angular
// velocities read the identity 6D (no rotation over the frame).
inline FrameInput assemble_input(const DeviceFrame* prev, const DeviceFrame& cur,
                                 const Scenario& scenario,
                                 std::int64_t frame_index) {
  FrameInput f;
  f.frame_index = frame_index;
  f.mask = scenario.present;
  f.dt = prev ? cur.head.timestamp - prev->head.timestamp : 1.0 / 60.0;
  if (prev && f.dt <= 0.0)
    throw NonMonotonicTime("device timestamps must increase");

  const std::array<const DevicePose*, 3> cur_poses = {&cur.head, &cur.left_hand,
                                                      &cur.right_hand};
  const std::array<const DevicePose*, 3> prev_poses =
      prev ? std::array<const DevicePose*, 3>{&prev->head, &prev->left_hand,
                                              &prev->right_hand}
           : std::array<const DevicePose*, 3>{nullptr, nullptr, nullptr};
  for (int c = kHead; c <= kRightHand; ++c) {
    const DevicePose& p = *cur_poses[c];
    VelocityPair v{Vec3{}, rot6d_identity()};
    if (prev) v = velocity_and_angular(*prev_poses[c], p);
    detail::write_pose_block(f.x.data() + component_offset(c), p.position,
                             v.linear, p.rotation, v.angular);
  }

  const std::array<const std::optional<ImuSample>*, 3> cur_imus = {
      &cur.pelvis, &cur.left_leg, &cur.right_leg};
  const std::array<const std::optional<ImuSample>*, 3> prev_imus =
      prev ? std::array<const std::optional<ImuSample>*, 3>{&prev->pelvis,
                                                            &prev->left_leg,
                                                            &prev->right_leg}
           : std::array<const std::optional<ImuSample>*, 3>{nullptr, nullptr,
                                                            nullptr};
  for (int c = kPelvisImu; c <= kRightLegImu; ++c) {
    if (!scenario.present[c]) continue;
    const std::optional<ImuSample>& s = *cur_imus[c - kPelvisImu];
    if (!s)
      throw MissingStream("scenario requires IMU component " +
                          std::to_string(c));
    Rot6d angvel = rot6d_identity();
    if (prev) {
      const std::optional<ImuSample>& sp = *prev_imus[c - kPelvisImu];
      if (!sp)
        throw MissingStream("scenario requires IMU component " +
                            std::to_string(c));
      angvel = matrix_to_rot6d(relative_rotation(sp->rotation, s->rotation));
    }
    detail::write_imu_block(f.x.data() + component_offset(c), s->rotation,
                            angvel, s->acceleration);
  }

  for (int c = kLeftHandRel; c <= kRightHandRel; ++c) {
    const DevicePose& hand = c == kLeftHandRel ? cur.left_hand : cur.right_hand;
    std::array<double, 18> block;
    if (prev) {
      const DevicePose& prev_hand =
          c == kLeftHandRel ? prev->left_hand : prev->right_hand;
      block = relative_hand_in_head(cur.head, hand, prev->head, prev_hand);
    } else {
      const Vec3 rel_pos =
          cur.head.rotation.transposed() * (hand.position - cur.head.position);
      const Rot6d rel_rot =
          matrix_to_rot6d(relative_rotation(cur.head.rotation, hand.rotation));
      const Rot6d ident = rot6d_identity();
      block = {};
      for (int i = 0; i < 3; ++i) block[i] = rel_pos[i];
      for (int i = 0; i < 6; ++i) block[6 + i] = rel_rot[i];
      for (int i = 0; i < 6; ++i) block[12 + i] = ident[i];
    }
    for (int i = 0; i < 18; ++i)
      f.x[component_offset(c) + i] = static_cast<float>(block[i]);
  }

  return f;
}

// Virtual inertial measurements for one joint of a ground-truth motion:
// orientation from FK, free acceleration (no gravity term) from the
// position second difference. Endpoints replicate the nearest interior
// value so the output length matches the input.
inline std::vector<ImuSample> synthesize_imu(const Motion& motion,
                                             const Skeleton& skel, int joint,
                                             double fps) {
  const std::size_t n = motion.frames.size();
  if (n < 3) throw TooShort("need at least 3 frames to synthesize an IMU");
  if (joint < 0 || joint >= kNumJoints)
    throw DimensionError("joint index out of range");

  std::vector<Vec3> pos(n);
  std::vector<Mat3> rot(n);
  for (std::size_t t = 0; t < n; ++t) {
    const BodyState s = forward_kinematics(skel, motion.shape,
                                           motion.frames[t].pose,
                                           motion.frames[t].root_translation);
    pos[t] = s.joint_pos[joint];
    rot[t] = s.global_rot[joint];
  }

  std::vector<ImuSample> out(n);
  const double fps2 = fps * fps;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t ti = std::min(std::max<std::size_t>(t, 1), n - 2);
    out[t].rotation = rot[t];
    out[t].acceleration = (pos[ti + 1] - pos[ti] * 2.0 + pos[ti - 1]) * fps2;
    out[t].timestamp = static_cast<double>(t) / fps;
  }
  return out;
}

} // namespace hmdtrack
