// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/linalg.hpp"
#include "hmdtrack/motion.hpp"
#include "hmdtrack/skeleton.hpp"

namespace hmdtrack {

struct LossWeights {
  double ori = 1.0;
  double lrot = 5.0;
  double grot = 1.0;
  double joint = 1.0;
  double smooth = 0.5;
};

struct LossReport {
  double l_ori = 0.0;
  double l_lrot = 0.0;
  double l_grot = 0.0;
  double l_joint = 0.0;
  double l_smooth = 0.0;
  double total = 0.0;
};

// Raw per-frame regression output: local pose in 6D plus shape.
struct PosePrediction {
  LocalPose theta;
  ShapeParams beta{};
};

namespace detail {

// Everything the loss terms need per frame. Predicted root translation is
// anchored from the ground-truth head position, matching how the tracker
// places the body at inference time.
struct LossFrames {
  std::vector<BodyState> pred;
  std::vector<BodyState> gt;
};

// Both bodies are placed relative to the ground-truth head position through
// the same expression, p[j] = head + (p0[j] - p0[head]), so a perfect
// prediction reproduces the ground-truth positions bit for bit.
inline BodyState place_by_head(const Skeleton& skel, const ShapeParams& beta,
                               const LocalPose& pose, const Vec3& head) {
  BodyState s = forward_kinematics(skel, beta, pose, Vec3{});
  const Vec3 head0 = s.joint_pos[kHeadJoint];
  for (int j = 0; j < kNumJoints; ++j)
    s.joint_pos[j] = head + (s.joint_pos[j] - head0);
  s.root_translation = s.joint_pos[0];
  return s;
}

inline LossFrames evaluate_loss_frames(const std::vector<PosePrediction>& pred,
                                       const Motion& gt, const Skeleton& skel) {
  if (pred.empty()) throw EmptyInput("loss over an empty sequence");
  if (pred.size() != gt.frames.size())
    throw LengthMismatch("prediction and ground truth differ in length");
  LossFrames out;
  out.pred.reserve(pred.size());
  out.gt.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const MotionFrame& g = gt.frames[t];
    const Vec3 head =
        forward_kinematics(skel, gt.shape, g.pose, g.root_translation)
            .joint_pos[kHeadJoint];
    out.gt.push_back(place_by_head(skel, gt.shape, g.pose, head));
    out.pred.push_back(place_by_head(skel, pred[t].beta, pred[t].theta, head));
  }
  return out;
}

inline int sgn(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

} // namespace detail

// The five-term objective: L1 on root-orientation 6D, local 6D, global 6D,
// joint positions, and the second-difference acceleration mismatch.
inline LossReport loss_terms(const std::vector<PosePrediction>& pred,
                             const Motion& gt, const Skeleton& skel,
                             const LossWeights& w = {}) {
  const auto frames = detail::evaluate_loss_frames(pred, gt, skel);
  const std::size_t T = pred.size();

  LossReport r;
  for (std::size_t t = 0; t < T; ++t) {
    const LocalPose& tp = pred[t].theta;
    const LocalPose& tg = gt.frames[t].pose;
    for (int i = 0; i < 6; ++i) r.l_ori += std::abs(tp[0][i] - tg[0][i]);
    for (int j = 0; j < kNumJoints; ++j)
      for (int i = 0; i < 6; ++i) r.l_lrot += std::abs(tp[j][i] - tg[j][i]);
    for (int j = 0; j < kNumJoints; ++j) {
      const Rot6d gp = matrix_to_rot6d(frames.pred[t].global_rot[j]);
      const Rot6d gg = matrix_to_rot6d(frames.gt[t].global_rot[j]);
      for (int i = 0; i < 6; ++i) r.l_grot += std::abs(gp[i] - gg[i]);
    }
    for (int j = 0; j < kNumJoints; ++j)
      for (int a = 0; a < 3; ++a)
        r.l_joint +=
            std::abs(frames.pred[t].joint_pos[j][a] - frames.gt[t].joint_pos[j][a]);
  }
  r.l_ori /= static_cast<double>(T) * 6.0;
  r.l_lrot /= static_cast<double>(T) * kNumJoints * 6.0;
  r.l_grot /= static_cast<double>(T) * kNumJoints * 6.0;
  r.l_joint /= static_cast<double>(T) * kNumJoints * 3.0;

  if (T >= 3) {
    for (std::size_t t = 1; t + 1 < T; ++t)
      for (int j = 0; j < kNumJoints; ++j)
        for (int a = 0; a < 3; ++a) {
          const double ap = frames.pred[t + 1].joint_pos[j][a] -
                            2.0 * frames.pred[t].joint_pos[j][a] +
                            frames.pred[t - 1].joint_pos[j][a];
          const double ag = frames.gt[t + 1].joint_pos[j][a] -
                            2.0 * frames.gt[t].joint_pos[j][a] +
                            frames.gt[t - 1].joint_pos[j][a];
          r.l_smooth += std::abs(ap - ag);
        }
    r.l_smooth /= static_cast<double>(T - 2) * kNumJoints * 3.0;
  }

  r.total = w.ori * r.l_ori + w.lrot * r.l_lrot + w.grot * r.l_grot +
            w.joint * r.l_joint + w.smooth * r.l_smooth;
  return r;
}

struct LossGradient {
  DMat dtheta; // T x 132
  DMat dbeta;  // T x 16
};

// Analytic gradient of the total loss with respect to the raw per-frame
// outputs. Uses the kinematic-chain Jacobians; |.| contributes its sign,
// with 0 at exact zeros.
inline LossGradient loss_gradient(const std::vector<PosePrediction>& pred,
                                  const Motion& gt, const Skeleton& skel,
                                  const LossWeights& w = {}) {
  const auto frames = detail::evaluate_loss_frames(pred, gt, skel);
  const std::size_t T = pred.size();
  const int P = kNumJoints * 6;
  LossGradient g{DMat(static_cast<int>(T), P),
                 DMat(static_cast<int>(T), kNumShapeCoeffs)};

  // Smooth-term signs on interior frames, folded into per-frame position
  // weights W_tau = s_{tau-1} - 2 s_tau + s_{tau+1}.
  std::vector<std::vector<double>> smooth_w(
      T, std::vector<double>(kNumJoints * 3, 0.0));
  if (T >= 3) {
    std::vector<std::vector<int>> s(T, std::vector<int>(kNumJoints * 3, 0));
    for (std::size_t t = 1; t + 1 < T; ++t)
      for (int i = 0; i < kNumJoints * 3; ++i) {
        const int j = i / 3, a = i % 3;
        const double ap = frames.pred[t + 1].joint_pos[j][a] -
                          2.0 * frames.pred[t].joint_pos[j][a] +
                          frames.pred[t - 1].joint_pos[j][a];
        const double ag = frames.gt[t + 1].joint_pos[j][a] -
                          2.0 * frames.gt[t].joint_pos[j][a] +
                          frames.gt[t - 1].joint_pos[j][a];
        s[t][i] = detail::sgn(ap - ag);
      }
    for (std::size_t tau = 0; tau < T; ++tau)
      for (int i = 0; i < kNumJoints * 3; ++i) {
        double acc = 0.0;
        if (tau + 1 < T && tau >= 1) acc -= 2.0 * s[tau][i];
        if (tau >= 2) acc += s[tau - 1][i];
        if (tau + 2 < T) acc += s[tau + 1][i];
        smooth_w[tau][i] = acc;
      }
  }

  const double n_ori = static_cast<double>(T) * 6.0;
  const double n_rot = static_cast<double>(T) * kNumJoints * 6.0;
  const double n_pos = static_cast<double>(T) * kNumJoints * 3.0;
  const double n_smooth =
      T >= 3 ? static_cast<double>(T - 2) * kNumJoints * 3.0 : 1.0;

  for (std::size_t t = 0; t < T; ++t) {
    const LocalPose& tp = pred[t].theta;
    const LocalPose& tg = gt.frames[t].pose;
    for (int i = 0; i < 6; ++i)
      g.dtheta(static_cast<int>(t), i) +=
          w.ori / n_ori * detail::sgn(tp[0][i] - tg[0][i]);
    for (int j = 0; j < kNumJoints; ++j)
      for (int i = 0; i < 6; ++i)
        g.dtheta(static_cast<int>(t), j * 6 + i) +=
            w.lrot / n_rot * detail::sgn(tp[j][i] - tg[j][i]);

    const DMat jrot = global_rot6d_jacobian(skel, pred[t].beta, pred[t].theta);
    std::vector<double> rot_sign(kNumJoints * 6);
    for (int j = 0; j < kNumJoints; ++j) {
      const Rot6d gp = matrix_to_rot6d(frames.pred[t].global_rot[j]);
      const Rot6d gg = matrix_to_rot6d(frames.gt[t].global_rot[j]);
      for (int i = 0; i < 6; ++i) rot_sign[j * 6 + i] = detail::sgn(gp[i] - gg[i]);
    }
    for (int row = 0; row < kNumJoints * 6; ++row) {
      if (rot_sign[row] == 0.0) continue;
      const double c = w.grot / n_rot * rot_sign[row];
      for (int col = 0; col < P; ++col)
        g.dtheta(static_cast<int>(t), col) += c * jrot(row, col);
    }

    // Position terms go through the head-anchored positions:
    // dp_j = J_j - J_head for both theta and beta.
    const DMat jpos = position_jacobian(skel, pred[t].beta, pred[t].theta);
    const DMat jshape = shape_position_jacobian(skel, pred[t].beta, pred[t].theta);
    std::vector<double> pos_w(kNumJoints * 3);
    for (int j = 0; j < kNumJoints; ++j)
      for (int a = 0; a < 3; ++a) {
        const int i = j * 3 + a;
        pos_w[i] = w.joint / n_pos *
                       detail::sgn(frames.pred[t].joint_pos[j][a] -
                                   frames.gt[t].joint_pos[j][a]) +
                   w.smooth / n_smooth * smooth_w[t][i];
      }
    std::vector<double> head_w(3, 0.0);
    for (int j = 0; j < kNumJoints; ++j)
      for (int a = 0; a < 3; ++a) head_w[a] += pos_w[j * 3 + a];
    for (int row = 0; row < kNumJoints * 3; ++row) {
      if (pos_w[row] == 0.0) continue;
      for (int col = 0; col < P; ++col)
        g.dtheta(static_cast<int>(t), col) += pos_w[row] * jpos(row, col);
      for (int col = 0; col < kNumShapeCoeffs; ++col)
        g.dbeta(static_cast<int>(t), col) += pos_w[row] * jshape(row, col);
    }
    for (int a = 0; a < 3; ++a) {
      if (head_w[a] == 0.0) continue;
      const int hrow = kHeadJoint * 3 + a;
      for (int col = 0; col < P; ++col)
        g.dtheta(static_cast<int>(t), col) -= head_w[a] * jpos(hrow, col);
      for (int col = 0; col < kNumShapeCoeffs; ++col)
        g.dbeta(static_cast<int>(t), col) -= head_w[a] * jshape(hrow, col);
    }
  }
  return g;
}

} // namespace hmdtrack
