// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/linalg.hpp"
#include "hmdtrack/rotmath.hpp"

namespace hmdtrack {

inline constexpr int kNumJoints = 22;
inline constexpr int kNumShapeCoeffs = 16;
inline constexpr int kHeadJoint = 15;
inline constexpr int kLeftWristJoint = 20;
inline constexpr int kRightWristJoint = 21;
inline constexpr int kPelvisJoint = 0;
inline constexpr int kLeftKneeJoint = 4;
inline constexpr int kRightKneeJoint = 5;

// Shape coefficients. Evaluation clamps each to [-5, 5].
using ShapeParams = std::array<double, kNumShapeCoeffs>;

inline ShapeParams zero_shape() {
  ShapeParams b{};
  return b;
}

// Local joint rotations in 6D form; index 0 is the root rotation.
using LocalPose = std::array<Rot6d, kNumJoints>;

inline LocalPose identity_pose() {
  LocalPose p;
  p.fill(rot6d_identity());
  return p;
}

struct JointSets {
  std::vector<int> hands;
  std::vector<int> upper;
  std::vector<int> lower;
  std::vector<int> root;
  std::vector<int> head;
};

// 22-joint kinematic tree. Rest offsets are a linear function of the 16
// shape coefficients: offset_j(b) = base_offset[j] + shape_blend[j][k]*b_k.
// Joint 0 sits at the root translation; its offset entries are unused.
struct Skeleton {
  std::array<int, kNumJoints> parent{};
  std::array<Vec3, kNumJoints> base_offset{};
  std::array<std::array<Vec3, kNumShapeCoeffs>, kNumJoints> shape_blend{};
  std::array<std::string, kNumJoints> joint_names{};
  JointSets joint_sets;

  bool is_ancestor(int anc, int j) const {
    while (j >= 0) {
      if (j == anc) return true;
      j = parent[j];
    }
    return false;
  }
};

struct BodyState {
  std::array<Mat3, kNumJoints> global_rot;
  std::array<Vec3, kNumJoints> joint_pos;
  Vec3 root_translation;
};

inline double clamp_shape_coeff(double b) {
  return std::min(5.0, std::max(-5.0, b));
}

inline std::array<Vec3, kNumJoints> joint_offsets(const Skeleton& skel,
                                                  const ShapeParams& beta) {
  std::array<Vec3, kNumJoints> out;
  for (int j = 0; j < kNumJoints; ++j) {
    Vec3 o = skel.base_offset[j];
    for (int k = 0; k < kNumShapeCoeffs; ++k)
      o += skel.shape_blend[j][k] * clamp_shape_coeff(beta[k]);
    out[j] = o;
  }
  return out;
}

inline BodyState forward_kinematics(const Skeleton& skel,
                                    const ShapeParams& beta,
                                    const LocalPose& pose,
                                    const Vec3& root_translation) {
  const auto offsets = joint_offsets(skel, beta);
  BodyState s;
  s.root_translation = root_translation;
  s.global_rot[0] = rot6d_to_matrix(pose[0]);
  s.joint_pos[0] = root_translation;
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = skel.parent[j];
    s.global_rot[j] = s.global_rot[p] * rot6d_to_matrix(pose[j]);
    s.joint_pos[j] = s.joint_pos[p] + s.global_rot[p] * offsets[j];
  }
  return s;
}

// Root translation that places the head joint exactly at head_pos.
inline Vec3 anchor_root_from_head(const Skeleton& skel,
                                  const ShapeParams& beta,
                                  const LocalPose& pose,
                                  const Vec3& head_pos) {
  const BodyState zero = forward_kinematics(skel, beta, pose, Vec3{});
  return head_pos - zero.joint_pos[kHeadJoint];
}

namespace detail {

// Per-joint ingredients shared by the chain-rule Jacobians:
// gen[k][b] = d(global_rot[k]) / d(pose[k][b]), holding ancestors fixed.
struct ChainDerivatives {
  BodyState state; // at zero root translation
  std::array<std::array<Mat3, 6>, kNumJoints> gen;
};

inline ChainDerivatives chain_derivatives(const Skeleton& skel,
                                          const ShapeParams& beta,
                                          const LocalPose& pose) {
  ChainDerivatives cd{forward_kinematics(skel, beta, pose, Vec3{}), {}};
  for (int k = 0; k < kNumJoints; ++k) {
    const auto local = rot6d_to_matrix_jacobian(pose[k]);
    const Mat3 rp =
        k == 0 ? Mat3::identity() : cd.state.global_rot[skel.parent[k]];
    for (int b = 0; b < 6; ++b) cd.gen[k][b] = rp * local[b];
  }
  return cd;
}

} // namespace detail

// d(joint_pos[j][a]) / d(pose[k][b]) at zero root translation,
// laid out as (3*22) x (6*22). Row 3j+a, column 6k+b.
// Nonzero only where k is a proper ancestor of j:
//   dp_j = gen[k][b] * R_k^T * (p_j - p_k).
inline DMat position_jacobian(const Skeleton& skel, const ShapeParams& beta,
                              const LocalPose& pose) {
  const auto cd = detail::chain_derivatives(skel, beta, pose);
  DMat jac(3 * kNumJoints, 6 * kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) {
    for (int k = skel.parent[j]; k >= 0; k = skel.parent[k]) {
      const Vec3 lever =
          cd.state.global_rot[k].transposed() *
          (cd.state.joint_pos[j] - cd.state.joint_pos[k]);
      for (int b = 0; b < 6; ++b) {
        const Vec3 d = cd.gen[k][b] * lever;
        for (int a = 0; a < 3; ++a) jac(3 * j + a, 6 * k + b) = d[a];
      }
    }
  }
  return jac;
}

// d(joint_pos[j][a]) / d(beta[k]), (3*22) x 16. Zero where the clamp is
// active. Translation-independent.
inline DMat shape_position_jacobian(const Skeleton& skel,
                                    const ShapeParams& beta,
                                    const LocalPose& pose) {
  const BodyState s = forward_kinematics(skel, beta, pose, Vec3{});
  DMat jac(3 * kNumJoints, kNumShapeCoeffs);
  std::array<bool, kNumShapeCoeffs> active{};
  for (int k = 0; k < kNumShapeCoeffs; ++k)
    active[k] = beta[k] > -5.0 && beta[k] < 5.0;
  for (int j = 1; j < kNumJoints; ++j) {
    // Accumulate along the path root -> j: dp_j/db_k = sum R_parent(m) B_m[k].
    for (int m = j; m >= 1; m = skel.parent[m]) {
      const Mat3& rp = s.global_rot[skel.parent[m]];
      for (int k = 0; k < kNumShapeCoeffs; ++k) {
        if (!active[k]) continue;
        const Vec3 d = rp * skel.shape_blend[m][k];
        for (int a = 0; a < 3; ++a) jac(3 * j + a, k) += d[a];
      }
    }
  }
  return jac;
}

// d(6D form of global_rot[j]) / d(pose[k][b]), (6*22) x (6*22).
// Row 6j+e where e indexes (col1 xyz, col2 xyz) of the global rotation.
inline DMat global_rot6d_jacobian(const Skeleton& skel,
                                  const ShapeParams& beta,
                                  const LocalPose& pose) {
  const auto cd = detail::chain_derivatives(skel, beta, pose);
  DMat jac(6 * kNumJoints, 6 * kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) {
    for (int k = j; k >= 0; k = skel.parent[k]) {
      const Mat3 rel = cd.state.global_rot[k].transposed() *
                       cd.state.global_rot[j];
      for (int b = 0; b < 6; ++b) {
        const Mat3 d = cd.gen[k][b] * rel;
        for (int c = 0; c < 2; ++c)
          for (int a = 0; a < 3; ++a)
            jac(6 * j + 3 * c + a, 6 * k + b) = d.m[a][c];
      }
    }
  }
  return jac;
}

// ---------------------------------------------------------------------------
// Bundled default skeleton and the skeleton asset format.

inline Skeleton default_skeleton() {
  Skeleton s;
  s.parent = {-1, 0, 0, 0, 1, 2, 3, 4,  5,  6,  7,
              8,  9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
  s.joint_names = {"pelvis",     "l_hip",      "r_hip",    "spine1",
                   "l_knee",     "r_knee",     "spine2",   "l_ankle",
                   "r_ankle",    "spine3",     "l_foot",   "r_foot",
                   "neck",       "l_collar",   "r_collar", "head",
                   "l_shoulder", "r_shoulder", "l_elbow",  "r_elbow",
                   "l_wrist",    "r_wrist"};
  // Rest offsets in meters; +x left, +y up, +z forward.
  s.base_offset = {Vec3{0.000, 0.000, 0.000},   Vec3{0.091, -0.085, 0.010},
                   Vec3{-0.091, -0.085, 0.010}, Vec3{0.000, 0.108, -0.012},
                   Vec3{0.006, -0.382, 0.003},  Vec3{-0.006, -0.382, 0.003},
                   Vec3{0.000, 0.131, 0.002},   Vec3{-0.008, -0.400, -0.012},
                   Vec3{0.008, -0.400, -0.012}, Vec3{0.000, 0.127, 0.004},
                   Vec3{0.003, -0.053, 0.122},  Vec3{-0.003, -0.053, 0.122},
                   Vec3{0.000, 0.180, -0.015},  Vec3{0.072, 0.130, -0.005},
                   Vec3{-0.072, 0.130, -0.005}, Vec3{0.000, 0.095, 0.022},
                   Vec3{0.098, 0.035, -0.008},  Vec3{-0.098, 0.035, -0.008},
                   Vec3{0.259, -0.010, -0.004}, Vec3{-0.259, -0.010, -0.004},
                   Vec3{0.249, -0.008, -0.002}, Vec3{-0.249, -0.008, -0.002}};
  // Synthetic blend shapes. Coefficient 0 scales overall stature; 1..5 scale
  // legs, arms, torso, hip width, and shoulder girdle; the rest add small
  // mixed perturbations so no coefficient is a no-op.
  auto in = [](int j, std::initializer_list<int> set) {
    for (int v : set)
      if (v == j) return true;
    return false;
  };
  for (int j = 1; j < kNumJoints; ++j) {
    s.shape_blend[j][0] = s.base_offset[j] * 0.10;
    if (in(j, {4, 5, 7, 8, 10, 11}))
      s.shape_blend[j][1] = s.base_offset[j] * 0.06;
    if (in(j, {18, 19, 20, 21})) s.shape_blend[j][2] = s.base_offset[j] * 0.06;
    if (in(j, {3, 6, 9, 12, 15})) s.shape_blend[j][3] = s.base_offset[j] * 0.05;
    if (in(j, {1, 2})) s.shape_blend[j][4] = s.base_offset[j] * 0.08;
    if (in(j, {13, 14, 16, 17})) s.shape_blend[j][5] = s.base_offset[j] * 0.06;
    for (int k = 6; k < kNumShapeCoeffs; ++k) {
      const int h = j * 7 + k * 3;
      s.shape_blend[j][k] = Vec3{0.001 * (h % 5 - 2), 0.001 * ((h / 5) % 5 - 2),
                                 0.001 * ((h / 25) % 5 - 2)};
    }
  }
  s.joint_sets.hands = {20, 21};
  s.joint_sets.root = {0};
  s.joint_sets.lower = {1, 2, 4, 5, 7, 8, 10, 11};
  s.joint_sets.upper = {3, 6, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21};
  s.joint_sets.head = {15};
  return s;
}

} // namespace hmdtrack
