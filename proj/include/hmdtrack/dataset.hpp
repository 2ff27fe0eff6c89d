// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hmdtrack/file_formats.hpp"
#include "hmdtrack/motion.hpp"
#include "hmdtrack/sensing.hpp"
#include "hmdtrack/skeleton.hpp"

namespace hmdtrack {

// Builds the paired (observation, ground truth) streams for one motion:
// head/hand device poses come from FK (head joint 15, wrists 20/21),
// inertial channels from synthesized IMUs on the pelvis and the knees (the
// knee rotation orients the shank segment the tracker is strapped to).
inline Dataset synthesize_dataset(const Motion& motion_in, const Skeleton& skel,
                                  const Scenario& scenario, double fps) {
  const Motion motion = resample_motion(motion_in, fps);
  const std::size_t n = motion.frames.size();
  if (n < 3) throw TooShort("need at least 3 frames to synthesize a dataset");

  std::vector<BodyState> states(n);
  for (std::size_t t = 0; t < n; ++t)
    states[t] = forward_kinematics(skel, motion.shape, motion.frames[t].pose,
                                   motion.frames[t].root_translation);

  const bool want_legs = scenario.present[kLeftLegImu];
  const bool want_pelvis = scenario.present[kPelvisImu];
  std::vector<ImuSample> pelvis, left_leg, right_leg;
  if (want_pelvis) pelvis = synthesize_imu(motion, skel, kPelvisJoint, fps);
  if (want_legs) {
    left_leg = synthesize_imu(motion, skel, kLeftKneeJoint, fps);
    right_leg = synthesize_imu(motion, skel, kRightKneeJoint, fps);
  }

  auto device_frame = [&](std::size_t t) {
    const double ts = static_cast<double>(t) / fps;
    DeviceFrame f;
    f.head = {states[t].joint_pos[kHeadJoint], states[t].global_rot[kHeadJoint],
              ts};
    f.left_hand = {states[t].joint_pos[kLeftWristJoint],
                   states[t].global_rot[kLeftWristJoint], ts};
    f.right_hand = {states[t].joint_pos[kRightWristJoint],
                    states[t].global_rot[kRightWristJoint], ts};
    if (want_pelvis) f.pelvis = pelvis[t];
    if (want_legs) {
      f.left_leg = left_leg[t];
      f.right_leg = right_leg[t];
    }
    return f;
  };

  Dataset d;
  d.scenario = scenario;
  d.fps = fps;
  d.gt = motion;
  d.inputs.reserve(n);
  DeviceFrame prev = device_frame(0);
  d.inputs.push_back(assemble_input(nullptr, prev, scenario, 0));
  d.inputs.back().dt = 1.0 / fps;
  for (std::size_t t = 1; t < n; ++t) {
    DeviceFrame cur = device_frame(t);
    d.inputs.push_back(
        assemble_input(&prev, cur, scenario, static_cast<std::int64_t>(t)));
    prev = cur;
  }
  return d;
}

} // namespace hmdtrack
