// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/skeleton.hpp"

namespace hmdtrack {

// Ground-truth motion clip: one shape vector plus per-frame root translation
// and local pose. Sampled at a fixed rate.
struct MotionFrame {
  Vec3 root_translation;
  LocalPose pose;
};

struct Motion {
  double fps = 60.0;
  ShapeParams shape{};
  std::vector<MotionFrame> frames;

  std::size_t size() const { return frames.size(); }
};

// Nearest-frame decimation for integer rate ratios. Anything else is
// rejected rather than silently interpolated.
inline Motion resample_motion(const Motion& m, double target_fps) {
  if (target_fps <= 0.0) throw UnsupportedRate("target fps must be positive");
  if (m.fps == target_fps) return m;
  const double ratio = m.fps / target_fps;
  const int stride = static_cast<int>(ratio + 0.5);
  if (stride < 1 || std::abs(ratio - stride) > 1e-9)
    throw UnsupportedRate("only integer decimation ratios are supported");
  Motion out;
  out.fps = target_fps;
  out.shape = m.shape;
  for (std::size_t i = 0; i < m.frames.size(); i += stride)
    out.frames.push_back(m.frames[i]);
  return out;
}

} // namespace hmdtrack
