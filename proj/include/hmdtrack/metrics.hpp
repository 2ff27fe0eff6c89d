// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/motion.hpp"
#include "hmdtrack/network.hpp"
#include "hmdtrack/rotmath.hpp"
#include "hmdtrack/skeleton.hpp"

namespace hmdtrack {

// MPJRE here is the geodesic angle between predicted and ground-truth
// global joint rotations, in degrees; reports carry this tag so numbers are
// only compared within-convention.
inline constexpr const char* kMpjreConvention = "geodesic_global_rotation_deg";

struct MetricReport {
  double mpjre_deg = 0.0;
  double mpjpe_cm = 0.0;
  std::optional<double> mpjve_cm_s;       // needs >= 2 frames
  std::optional<double> jitter_1e2_m_s3;  // needs >= 4 frames; predicted motion only
  double h_pe_cm = 0.0;
  double u_pe_cm = 0.0;
  double l_pe_cm = 0.0;
  double r_pe_cm = 0.0;
  std::optional<double> fps_hz;
};

// Per-frame joint positions and global rotations for one sequence.
struct JointTrack {
  std::vector<std::vector<Vec3>> pos;  // [frame][joint]
  std::vector<std::vector<Mat3>> rot;  // [frame][joint]

  std::size_t frames() const { return pos.size(); }
  std::size_t joints() const { return pos.empty() ? 0 : pos[0].size(); }
};

inline JointTrack track_from_motion(const Motion& m, const Skeleton& skel) {
  JointTrack t;
  for (const MotionFrame& f : m.frames) {
    const BodyState s =
        forward_kinematics(skel, m.shape, f.pose, f.root_translation);
    t.pos.emplace_back(s.joint_pos.begin(), s.joint_pos.end());
    t.rot.emplace_back(s.global_rot.begin(), s.global_rot.end());
  }
  return t;
}

inline JointTrack track_from_outputs(const std::vector<PoseOutput>& outs) {
  JointTrack t;
  for (const PoseOutput& o : outs) {
    t.pos.emplace_back(o.body.joint_pos.begin(), o.body.joint_pos.end());
    t.rot.emplace_back(o.body.global_rot.begin(), o.body.global_rot.end());
  }
  return t;
}

inline MetricReport metrics(const JointTrack& pred, const JointTrack& gt,
                            const JointSets& sets, double fps) {
  if (pred.frames() != gt.frames())
    throw LengthMismatch("prediction and ground truth differ in length");
  if (pred.frames() == 0) throw EmptyInput("metrics over an empty sequence");
  if (fps <= 0.0) throw UnsupportedRate("fps must be positive");
  const std::size_t T = pred.frames();
  const std::size_t J = pred.joints();
  if (J == 0 || gt.joints() != J)
    throw DimensionError("joint counts differ between tracks");

  constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;
  MetricReport r;
  double re = 0.0, pe = 0.0;
  std::vector<double> subset_pe(J, 0.0); // per-joint position error sum
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < J; ++j) {
      re += geodesic_angle(pred.rot[t][j], gt.rot[t][j]);
      const double d = norm(pred.pos[t][j] - gt.pos[t][j]);
      pe += d;
      subset_pe[j] += d;
    }
  const double tj = static_cast<double>(T) * static_cast<double>(J);
  r.mpjre_deg = re / tj * kRadToDeg;
  r.mpjpe_cm = pe / tj * 100.0;

  auto subset_mean = [&](const std::vector<int>& set) {
    if (set.empty()) return 0.0;
    double s = 0.0;
    for (int j : set) s += subset_pe[j];
    return s / (static_cast<double>(T) * set.size()) * 100.0;
  };
  r.h_pe_cm = subset_mean(sets.hands);
  r.u_pe_cm = subset_mean(sets.upper);
  r.l_pe_cm = subset_mean(sets.lower);
  r.r_pe_cm = subset_mean(sets.root);

  if (T >= 2) {
    double ve = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t)
      for (std::size_t j = 0; j < J; ++j) {
        const Vec3 dp = pred.pos[t + 1][j] - pred.pos[t][j];
        const Vec3 dg = gt.pos[t + 1][j] - gt.pos[t][j];
        ve += norm((dp - dg) * fps);
      }
    r.mpjve_cm_s = ve / (static_cast<double>(T - 1) * J) * 100.0;
  }

  if (T >= 4) {
    // Jitter is a smoothness statistic of the *predicted* motion: mean jerk
    // magnitude from the third finite difference, in 1e2 m/s^3.
    double jit = 0.0;
    const double fps3 = fps * fps * fps;
    for (std::size_t t = 0; t + 3 < T; ++t)
      for (std::size_t j = 0; j < J; ++j) {
        const Vec3 jerk = (pred.pos[t + 3][j] - pred.pos[t + 2][j] * 3.0 +
                           pred.pos[t + 1][j] * 3.0 - pred.pos[t][j]) *
                          fps3;
        jit += norm(jerk);
      }
    r.jitter_1e2_m_s3 = jit / (static_cast<double>(T - 3) * J) / 100.0;
  }
  return r;
}

inline MetricReport metrics(const std::vector<PoseOutput>& pred,
                            const Motion& gt, const Skeleton& skel,
                            double fps) {
  return metrics(track_from_outputs(pred), track_from_motion(gt, skel),
                 skel.joint_sets, fps);
}

// Frame-weighted mean of per-sequence reports. Optional fields average over
// the sequences where they exist.
inline MetricReport aggregate_reports(const std::vector<MetricReport>& reports,
                                      const std::vector<std::size_t>& frames) {
  if (reports.empty()) throw EmptyInput("no reports to aggregate");
  if (reports.size() != frames.size())
    throw LengthMismatch("one frame count per report required");
  MetricReport out;
  double wsum = 0.0, ve_w = 0.0, jit_w = 0.0, fps_w = 0.0;
  double ve = 0.0, jit = 0.0, fps = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double w = static_cast<double>(frames[i]);
    const MetricReport& r = reports[i];
    wsum += w;
    out.mpjre_deg += w * r.mpjre_deg;
    out.mpjpe_cm += w * r.mpjpe_cm;
    out.h_pe_cm += w * r.h_pe_cm;
    out.u_pe_cm += w * r.u_pe_cm;
    out.l_pe_cm += w * r.l_pe_cm;
    out.r_pe_cm += w * r.r_pe_cm;
    if (r.mpjve_cm_s) {
      ve += w * *r.mpjve_cm_s;
      ve_w += w;
    }
    if (r.jitter_1e2_m_s3) {
      jit += w * *r.jitter_1e2_m_s3;
      jit_w += w;
    }
    if (r.fps_hz) {
      fps += w * *r.fps_hz;
      fps_w += w;
    }
  }
  if (wsum <= 0.0) throw EmptyInput("aggregate over zero frames");
  out.mpjre_deg /= wsum;
  out.mpjpe_cm /= wsum;
  out.h_pe_cm /= wsum;
  out.u_pe_cm /= wsum;
  out.l_pe_cm /= wsum;
  out.r_pe_cm /= wsum;
  if (ve_w > 0.0) out.mpjve_cm_s = ve / ve_w;
  if (jit_w > 0.0) out.jitter_1e2_m_s3 = jit / jit_w;
  if (fps_w > 0.0) out.fps_hz = fps / fps_w;
  return out;
}

inline nlohmann::json metric_report_to_json(const MetricReport& r) {
  nlohmann::json j{{"mpjre_deg", r.mpjre_deg},
                   {"mpjpe_cm", r.mpjpe_cm},
                   {"h_pe_cm", r.h_pe_cm},
                   {"u_pe_cm", r.u_pe_cm},
                   {"l_pe_cm", r.l_pe_cm},
                   {"r_pe_cm", r.r_pe_cm},
                   {"mpjre_convention", kMpjreConvention}};
  j["mpjve_cm_s"] = r.mpjve_cm_s ? nlohmann::json(*r.mpjve_cm_s)
                                 : nlohmann::json(nullptr);
  j["jitter_1e2_m_s3"] = r.jitter_1e2_m_s3 ? nlohmann::json(*r.jitter_1e2_m_s3)
                                           : nlohmann::json(nullptr);
  if (r.fps_hz) j["fps_hz"] = *r.fps_hz;
  return j;
}

} // namespace hmdtrack
