// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/rotmath.hpp"
#include "hmdtrack/sensing.hpp"

namespace hmdtrack {

// Uncalibrated inertial sample. rotation is sensor-to-world; acceleration is
// free acceleration expressed in the capture's world frame (device adapters
// must remove gravity and rotate sensor-frame readings before ingestion).
struct RawImuSample {
  int sensor_id = 0;
  double timestamp = 0.0;
  Mat3 rotation;
  Vec3 acceleration;
};

struct RawCapture {
  std::vector<RawImuSample> samples;
};

enum class SensorRole { kPelvis, kLeftLeg, kRightLeg };

inline const char* sensor_role_name(SensorRole r) {
  switch (r) {
    case SensorRole::kPelvis: return "pelvis";
    case SensorRole::kLeftLeg: return "left_leg";
    case SensorRole::kRightLeg: return "right_leg";
  }
  return "pelvis";
}

inline SensorRole parse_sensor_role(const std::string& s) {
  if (s == "pelvis") return SensorRole::kPelvis;
  if (s == "left_leg") return SensorRole::kLeftLeg;
  if (s == "right_leg") return SensorRole::kRightLeg;
  throw ParseError("unknown sensor role '" + s + "'");
}

// Calibrated mapping: bone-in-body = heading * raw.rotation * offset[id].
struct CalibrationResult {
  Mat3 heading;
  std::map<int, Mat3> offset;
  std::map<int, SensorRole> assignment;
  std::map<int, double> still_residual_deg;
  double still_start_s = 0.0;
  double still_end_s = 0.0;
};

// Detection thresholds. Conservative values validated by the synthetic
// closed-loop tests.
inline constexpr double kStillAngularSpeed = 5.0 * 3.14159265358979323846 / 180.0; // rad/s
inline constexpr double kStillMinDuration = 5.0;     // s
inline constexpr double kSegmentMergeGap = 1.0;      // s
inline constexpr double kEnergyRatioThreshold = 3.0; // leg vs pelvis / first vs second lift

inline ImuSample apply_calibration(const RawImuSample& raw,
                                   const CalibrationResult& calib) {
  auto it = calib.offset.find(raw.sensor_id);
  if (it == calib.offset.end())
    throw UnknownSensor("sensor id " + std::to_string(raw.sensor_id));
  ImuSample out;
  out.rotation = calib.heading * raw.rotation * it->second;
  out.acceleration = calib.heading * raw.acceleration;
  out.timestamp = raw.timestamp;
  return out;
}

namespace detail {

struct SensorTrack {
  int id = 0;
  std::vector<double> t;
  std::vector<Mat3> rot;
};

struct Segment {
  int begin = 0; // interval indices [begin, end)
  int end = 0;
};

inline std::vector<SensorTrack> split_by_sensor(const RawCapture& capture) {
  std::map<int, SensorTrack> by_id;
  for (const RawImuSample& s : capture.samples) {
    SensorTrack& tr = by_id[s.sensor_id];
    tr.id = s.sensor_id;
    if (!tr.t.empty() && s.timestamp <= tr.t.back())
      throw NonMonotonicTime("capture timestamps must increase per sensor");
    tr.t.push_back(s.timestamp);
    tr.rot.push_back(s.rotation);
  }
  std::vector<SensorTrack> tracks;
  for (auto& [id, tr] : by_id) tracks.push_back(std::move(tr));
  if (tracks.size() != 2 && tracks.size() != 3)
    throw DimensionError("calibration expects 2 or 3 sensors, got " +
                         std::to_string(tracks.size()));
  const std::size_t n = tracks[0].t.size();
  for (const SensorTrack& tr : tracks) {
    if (tr.t.size() != n)
      throw ParseError("sensors have differing sample counts");
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(tr.t[i] - tracks[0].t[i]) > 1e-6)
        throw ParseError("sensor streams are not sample-aligned");
  }
  if (n < 3) throw TooShort("capture too short to calibrate");
  return tracks;
}

inline Mat3 mean_rotation(const std::vector<Mat3>& rs, int begin, int end) {
  Mat3 sum;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) sum.m[i][j] = 0.0;
  for (int i = begin; i < end; ++i) sum = sum + rs[i];
  return project_to_rotation(sum * (1.0 / static_cast<double>(end - begin)));
}

} // namespace detail

// Recovers per-sensor mounting offsets, the common heading, and the
// sensor-to-limb assignment from a capture of the three scripted actions:
// stand still (>= 5 s), bend the knees and hold, then lift the left and the
// right leg in sequence.
inline CalibrationResult calibrate(const RawCapture& capture) {
  const auto tracks = detail::split_by_sensor(capture);
  const std::size_t n_sensors = tracks.size();
  const std::size_t n = tracks[0].t.size();
  const std::vector<double>& t = tracks[0].t;

  // Per-interval angular speed, and the max across sensors.
  std::vector<std::vector<double>> speed(n_sensors, std::vector<double>(n - 1));
  std::vector<double> motion(n - 1, 0.0);
  for (std::size_t s = 0; s < n_sensors; ++s) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double dt = t[i + 1] - t[i];
      speed[s][i] = geodesic_angle(tracks[s].rot[i], tracks[s].rot[i + 1]) / dt;
      motion[i] = std::max(motion[i], speed[s][i]);
    }
  }

  // Longest still run.
  int best_b = -1, best_e = -1;
  double best_dur = 0.0;
  for (std::size_t i = 0; i < motion.size();) {
    if (motion[i] >= kStillAngularSpeed) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < motion.size() && motion[j] < kStillAngularSpeed) ++j;
    const double dur = t[j] - t[i];
    if (dur > best_dur) {
      best_dur = dur;
      best_b = static_cast<int>(i);
      best_e = static_cast<int>(j);
    }
    i = j;
  }
  if (best_b < 0 || best_dur < kStillMinDuration)
    throw NoStillSegment("no low-motion window of at least 5 s");

  // Mean orientation per sensor over the still window.
  std::vector<Mat3> still_mean(n_sensors);
  for (std::size_t s = 0; s < n_sensors; ++s)
    still_mean[s] = detail::mean_rotation(tracks[s].rot, best_b, best_e + 1);

  // Active regions after the still window, merging brief gaps. The first is
  // the knee bend; the last two are the leg lifts.
  std::vector<detail::Segment> regions;
  for (std::size_t i = best_e; i < motion.size();) {
    if (motion[i] < kStillAngularSpeed) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < motion.size() && motion[j] >= kStillAngularSpeed) ++j;
    if (!regions.empty() && t[i] - t[regions.back().end] < kSegmentMergeGap)
      regions.back().end = static_cast<int>(j);
    else
      regions.push_back({static_cast<int>(i), static_cast<int>(j)});
    i = j;
  }
  if (regions.size() < 3)
    throw AmbiguousAssignment(
        "expected knee-bend and two leg-lift segments after the still window, "
        "found " +
        std::to_string(regions.size()) + " active region(s)");

  // Motion energy per sensor per region (total rotation traveled, radians).
  auto region_energy = [&](std::size_t s, const detail::Segment& g) {
    double e = 0.0;
    for (int i = g.begin; i < g.end; ++i) e += speed[s][i] * (t[i + 1] - t[i]);
    return e;
  };

  // Pelvis = lowest total energy across all activity (3-sensor captures).
  std::vector<double> total_energy(n_sensors, 0.0);
  for (std::size_t s = 0; s < n_sensors; ++s)
    for (const auto& g : regions) total_energy[s] += region_energy(s, g);
  int pelvis_idx = -1;
  std::vector<int> leg_idx;
  if (n_sensors == 3) {
    pelvis_idx = 0;
    for (int s = 1; s < 3; ++s)
      if (total_energy[s] < total_energy[pelvis_idx]) pelvis_idx = s;
    double second_lowest = 1e300;
    for (int s = 0; s < 3; ++s)
      if (s != pelvis_idx) second_lowest = std::min(second_lowest, total_energy[s]);
    if (second_lowest < kEnergyRatioThreshold * total_energy[pelvis_idx])
      throw AmbiguousAssignment("pelvis sensor not separable by motion energy");
    for (int s = 0; s < 3; ++s)
      if (s != pelvis_idx) leg_idx.push_back(s);
  } else {
    leg_idx = {0, 1};
  }

  // Knee-bend axis in the world frame, from the start-to-peak displacement
  // of each leg sensor in the first region. Mounting cancels in
  // R(t) R(start)^T, so this needs no offsets.
  const detail::Segment& bend = regions.front();
  Vec3 axis_sum{};
  for (int s : leg_idx) {
    const Mat3& r0 = tracks[s].rot[bend.begin];
    double peak_angle = 0.0;
    Vec3 peak_axis{};
    for (int i = bend.begin; i <= bend.end; ++i) {
      const Vec3 w = rotation_log(tracks[s].rot[i] * r0.transposed());
      const double a = norm(w);
      if (a > peak_angle) {
        peak_angle = a;
        peak_axis = w / a;
      }
    }
    axis_sum += peak_axis * peak_angle;
  }
  const Vec3 up{0, 1, 0};
  Vec3 lateral = axis_sum - dot(axis_sum, up) * up;
  Mat3 world_from_body = Mat3::identity();
  if (norm(lateral) > 1e-9) {
    lateral = lateral / norm(lateral);
    world_from_body = Mat3::from_columns(lateral, up, cross(lateral, up));
  }
  const Mat3 heading = world_from_body.transposed();

  // Leg lifts: the left leg is lifted first.
  const detail::Segment& lift1 = regions[regions.size() - 2];
  const detail::Segment& lift2 = regions[regions.size() - 1];
  const double e_a1 = region_energy(leg_idx[0], lift1);
  const double e_b1 = region_energy(leg_idx[1], lift1);
  const double e_a2 = region_energy(leg_idx[0], lift2);
  const double e_b2 = region_energy(leg_idx[1], lift2);
  int left, right;
  if (e_a1 > e_b1) {
    left = leg_idx[0];
    right = leg_idx[1];
  } else {
    left = leg_idx[1];
    right = leg_idx[0];
  }
  const double r1 = std::max(e_a1, e_b1) / std::max(1e-12, std::min(e_a1, e_b1));
  const double e_right2 = right == leg_idx[0] ? e_a2 : e_b2;
  const double e_left2 = right == leg_idx[0] ? e_b2 : e_a2;
  if (r1 < kEnergyRatioThreshold ||
      e_right2 < kEnergyRatioThreshold * std::max(1e-12, e_left2))
    throw AmbiguousAssignment("leg-lift motion energies too close to assign");

  CalibrationResult out;
  out.heading = heading;
  out.still_start_s = t[best_b];
  out.still_end_s = t[best_e];
  for (std::size_t s = 0; s < n_sensors; ++s) {
    out.offset[tracks[s].id] = still_mean[s].transposed() * world_from_body;
    double resid = 0.0;
    for (int i = best_b; i <= best_e; ++i)
      resid += geodesic_angle(still_mean[s], tracks[s].rot[i]);
    out.still_residual_deg[tracks[s].id] =
        resid / (best_e - best_b + 1) * 180.0 / 3.14159265358979323846;
  }
  if (pelvis_idx >= 0)
    out.assignment[tracks[pelvis_idx].id] = SensorRole::kPelvis;
  out.assignment[tracks[left].id] = SensorRole::kLeftLeg;
  out.assignment[tracks[right].id] = SensorRole::kRightLeg;
  return out;
}

} // namespace hmdtrack
