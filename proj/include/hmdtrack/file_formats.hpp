// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hmdtrack/calibration.hpp"
#include "hmdtrack/errors.hpp"
#include "hmdtrack/motion.hpp"
#include "hmdtrack/sensing.hpp"
#include "hmdtrack/skeleton.hpp"

// Line-oriented text formats (see docs/FORMATS.md). Numbers are printed
// with round-trip precision, so rewriting an unchanged structure is
// byte-identical.

namespace hmdtrack {
namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

class LineReader {
public:
  LineReader(const std::string& path, const char* expected_magic) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) lines_.push_back(line);
    if (lines_.empty()) throw ParseError("empty file '" + path + "'");
    std::istringstream head(lines_[0]);
    std::string magic, version;
    head >> magic >> version;
    if (magic != expected_magic)
      throw ParseError("expected " + std::string(expected_magic) + " in '" +
                       path + "'");
    if (version != "v1")
      throw VersionMismatch(std::string(expected_magic) + " version '" +
                            version + "' is not supported");
    next_ = 1;
  }

  bool done() const { return next_ >= lines_.size(); }
  const std::string& peek() const { return lines_[next_]; }
  std::istringstream take() { return std::istringstream(lines_[next_++]); }

  // Takes the next line and checks its leading keyword.
  std::istringstream take(const char* keyword) {
    if (done())
      throw ParseError(std::string("missing '") + keyword + "' record");
    std::istringstream s = take();
    std::string k;
    s >> k;
    if (k != keyword)
      throw ParseError("expected '" + std::string(keyword) + "', found '" + k +
                       "'");
    return s;
  }

private:
  std::vector<std::string> lines_;
  std::size_t next_ = 0;
};

template <typename T>
T read_value(std::istringstream& s, const char* what) {
  T v;
  if (!(s >> v)) throw ParseError(std::string("malformed ") + what);
  return v;
}

inline Mat3 read_mat3(std::istringstream& s, const char* what) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = read_value<double>(s, what);
  return r;
}

inline void write_mat3(std::ostream& out, const Mat3& r) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << " " << fmt(r.m[i][j]);
}

} // namespace detail

// --------------------------------------------------------------------------
// Skeleton asset

inline void save_skeleton(const Skeleton& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "HMDTRACK_SKELETON v1\n";
  out << "joints " << kNumJoints << "\n";
  out << "shapes " << kNumShapeCoeffs << "\n";
  out << "parents";
  for (int p : s.parent) out << " " << p;
  out << "\nnames";
  for (const std::string& n : s.joint_names) out << " " << n;
  out << "\n";
  for (int j = 0; j < kNumJoints; ++j)
    out << "offset " << j << " " << detail::fmt(s.base_offset[j].x) << " "
        << detail::fmt(s.base_offset[j].y) << " "
        << detail::fmt(s.base_offset[j].z) << "\n";
  for (int j = 0; j < kNumJoints; ++j)
    for (int k = 0; k < kNumShapeCoeffs; ++k)
      out << "blend " << j << " " << k << " "
          << detail::fmt(s.shape_blend[j][k].x) << " "
          << detail::fmt(s.shape_blend[j][k].y) << " "
          << detail::fmt(s.shape_blend[j][k].z) << "\n";
  auto write_set = [&](const char* name, const std::vector<int>& set) {
    out << "set " << name;
    for (int j : set) out << " " << j;
    out << "\n";
  };
  write_set("hands", s.joint_sets.hands);
  write_set("upper", s.joint_sets.upper);
  write_set("lower", s.joint_sets.lower);
  write_set("root", s.joint_sets.root);
  write_set("head", s.joint_sets.head);
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline Skeleton load_skeleton(const std::string& path) {
  detail::LineReader r(path, "HMDTRACK_SKELETON");
  Skeleton s;
  {
    auto line = r.take("joints");
    if (detail::read_value<int>(line, "joint count") != kNumJoints)
      throw DimensionError("skeleton must have exactly 22 joints");
  }
  {
    auto line = r.take("shapes");
    if (detail::read_value<int>(line, "shape count") != kNumShapeCoeffs)
      throw DimensionError("skeleton must have exactly 16 shape coefficients");
  }
  {
    auto line = r.take("parents");
    for (int j = 0; j < kNumJoints; ++j)
      s.parent[j] = detail::read_value<int>(line, "parent index");
    if (s.parent[0] != -1) throw TopologyError("joint 0 must have no parent");
    for (int j = 1; j < kNumJoints; ++j)
      if (s.parent[j] < 0 || s.parent[j] >= j)
        throw TopologyError("parents must be topologically ordered");
  }
  {
    auto line = r.take("names");
    for (int j = 0; j < kNumJoints; ++j)
      s.joint_names[j] = detail::read_value<std::string>(line, "joint name");
  }
  for (int j = 0; j < kNumJoints; ++j) {
    auto line = r.take("offset");
    const int idx = detail::read_value<int>(line, "offset index");
    if (idx != j) throw ParseError("offset records out of order");
    for (int a = 0; a < 3; ++a)
      s.base_offset[j][a] = detail::read_value<double>(line, "offset value");
  }
  for (int j = 0; j < kNumJoints; ++j)
    for (int k = 0; k < kNumShapeCoeffs; ++k) {
      auto line = r.take("blend");
      if (detail::read_value<int>(line, "blend joint") != j ||
          detail::read_value<int>(line, "blend coeff") != k)
        throw ParseError("blend records out of order");
      for (int a = 0; a < 3; ++a)
        s.shape_blend[j][k][a] = detail::read_value<double>(line, "blend value");
    }
  while (!r.done()) {
    auto line = r.take("set");
    const std::string name = detail::read_value<std::string>(line, "set name");
    std::vector<int> ids;
    int v;
    while (line >> v) {
      if (v < 0 || v >= kNumJoints)
        throw DimensionError("joint set index out of range");
      ids.push_back(v);
    }
    if (name == "hands") s.joint_sets.hands = ids;
    else if (name == "upper") s.joint_sets.upper = ids;
    else if (name == "lower") s.joint_sets.lower = ids;
    else if (name == "root") s.joint_sets.root = ids;
    else if (name == "head") s.joint_sets.head = ids;
    else throw ParseError("unknown joint set '" + name + "'");
  }
  return s;
}

// --------------------------------------------------------------------------
// Ground-truth motion

inline void save_motion(const Motion& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "HMDTRACK_MOTION v1\n";
  out << "fps " << detail::fmt(m.fps) << "\n";
  out << "joints " << kNumJoints << "\n";
  out << "shape";
  for (double b : m.shape) out << " " << detail::fmt(b);
  out << "\nframes " << m.frames.size() << "\n";
  for (const MotionFrame& f : m.frames) {
    out << "frame " << detail::fmt(f.root_translation.x) << " "
        << detail::fmt(f.root_translation.y) << " "
        << detail::fmt(f.root_translation.z);
    for (const Rot6d& r : f.pose)
      for (double v : r) out << " " << detail::fmt(v);
    out << "\n";
  }
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline Motion load_motion(const std::string& path) {
  detail::LineReader r(path, "HMDTRACK_MOTION");
  Motion m;
  {
    auto line = r.take("fps");
    m.fps = detail::read_value<double>(line, "fps");
    if (m.fps <= 0.0) throw ParseError("fps must be positive");
  }
  {
    auto line = r.take("joints");
    if (detail::read_value<int>(line, "joint count") != kNumJoints)
      throw DimensionError("motion must carry 22 joints");
  }
  {
    auto line = r.take("shape");
    for (double& b : m.shape) b = detail::read_value<double>(line, "shape");
  }
  std::size_t n = 0;
  {
    auto line = r.take("frames");
    n = detail::read_value<std::size_t>(line, "frame count");
  }
  m.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto line = r.take("frame");
    MotionFrame& f = m.frames[i];
    for (int a = 0; a < 3; ++a)
      f.root_translation[a] = detail::read_value<double>(line, "translation");
    for (Rot6d& rot : f.pose)
      for (double& v : rot) v = detail::read_value<double>(line, "rot6d");
  }
  return m;
}

// --------------------------------------------------------------------------
// Raw IMU capture

inline void save_capture(const RawCapture& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "HMDTRACK_CAPTURE v1\n";
  for (const RawImuSample& s : c.samples) {
    out << "sample " << s.sensor_id << " " << detail::fmt(s.timestamp);
    detail::write_mat3(out, s.rotation);
    out << " " << detail::fmt(s.acceleration.x) << " "
        << detail::fmt(s.acceleration.y) << " "
        << detail::fmt(s.acceleration.z) << "\n";
  }
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline RawCapture load_capture(const std::string& path) {
  detail::LineReader r(path, "HMDTRACK_CAPTURE");
  RawCapture c;
  while (!r.done()) {
    auto line = r.take("sample");
    RawImuSample s;
    s.sensor_id = detail::read_value<int>(line, "sensor id");
    s.timestamp = detail::read_value<double>(line, "timestamp");
    s.rotation = detail::read_mat3(line, "rotation");
    for (int a = 0; a < 3; ++a)
      s.acceleration[a] = detail::read_value<double>(line, "acceleration");
    c.samples.push_back(s);
  }
  return c;
}

// --------------------------------------------------------------------------
// Calibration result

inline void save_calibration(const CalibrationResult& c,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "HMDTRACK_CALIB v1\n";
  out << "heading";
  detail::write_mat3(out, c.heading);
  out << "\nstill " << detail::fmt(c.still_start_s) << " "
      << detail::fmt(c.still_end_s) << "\n";
  for (const auto& [id, offset] : c.offset) {
    out << "sensor " << id << " " << sensor_role_name(c.assignment.at(id))
        << " " << detail::fmt(c.still_residual_deg.at(id));
    detail::write_mat3(out, offset);
    out << "\n";
  }
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline CalibrationResult load_calibration(const std::string& path) {
  detail::LineReader r(path, "HMDTRACK_CALIB");
  CalibrationResult c;
  {
    auto line = r.take("heading");
    c.heading = detail::read_mat3(line, "heading");
  }
  {
    auto line = r.take("still");
    c.still_start_s = detail::read_value<double>(line, "still start");
    c.still_end_s = detail::read_value<double>(line, "still end");
  }
  while (!r.done()) {
    auto line = r.take("sensor");
    const int id = detail::read_value<int>(line, "sensor id");
    const std::string role = detail::read_value<std::string>(line, "role");
    c.assignment[id] = parse_sensor_role(role);
    c.still_residual_deg[id] = detail::read_value<double>(line, "residual");
    c.offset[id] = detail::read_mat3(line, "offset");
  }
  return c;
}

// --------------------------------------------------------------------------
// Synthetic evaluation dataset: paired observation and ground-truth streams.

struct Dataset {
  Scenario scenario;
  double fps = 60.0;
  std::vector<FrameInput> inputs;
  Motion gt;
};

inline void save_dataset(const Dataset& d, const std::string& path) {
  if (d.inputs.size() != d.gt.frames.size())
    throw LengthMismatch("dataset inputs and ground truth differ in length");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << "HMDTRACK_DATASET v1\n";
  out << "scenario " << scenario_name(d.scenario.tag) << "\n";
  out << "fps " << detail::fmt(d.fps) << "\n";
  out << "frames " << d.inputs.size() << "\n";
  out << "shape";
  for (double b : d.gt.shape) out << " " << detail::fmt(b);
  out << "\n";
  for (std::size_t i = 0; i < d.inputs.size(); ++i) {
    const FrameInput& f = d.inputs[i];
    out << "input " << i;
    for (bool m : f.mask) out << " " << (m ? 1 : 0);
    for (float v : f.x) out << " " << detail::fmt(v);
    out << "\n";
    const MotionFrame& g = d.gt.frames[i];
    out << "gt " << i << " " << detail::fmt(g.root_translation.x) << " "
        << detail::fmt(g.root_translation.y) << " "
        << detail::fmt(g.root_translation.z);
    for (const Rot6d& r : g.pose)
      for (double v : r) out << " " << detail::fmt(v);
    out << "\n";
  }
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
  detail::LineReader r(path, "HMDTRACK_DATASET");
  Dataset d;
  {
    auto line = r.take("scenario");
    d.scenario =
        parse_scenario(detail::read_value<std::string>(line, "scenario"));
  }
  {
    auto line = r.take("fps");
    d.fps = detail::read_value<double>(line, "fps");
    if (d.fps <= 0.0) throw ParseError("fps must be positive");
  }
  std::size_t n = 0;
  {
    auto line = r.take("frames");
    n = detail::read_value<std::size_t>(line, "frame count");
  }
  {
    auto line = r.take("shape");
    for (double& b : d.gt.shape) b = detail::read_value<double>(line, "shape");
  }
  d.gt.fps = d.fps;
  d.inputs.resize(n);
  d.gt.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    {
      auto line = r.take("input");
      if (detail::read_value<std::size_t>(line, "frame index") != i)
        throw ParseError("input records out of order");
      FrameInput& f = d.inputs[i];
      f.frame_index = static_cast<std::int64_t>(i);
      f.dt = 1.0 / d.fps;
      for (bool& m : f.mask) m = detail::read_value<int>(line, "mask") != 0;
      for (float& v : f.x) v = detail::read_value<float>(line, "input value");
      validate_frame_input(f);
    }
    {
      auto line = r.take("gt");
      if (detail::read_value<std::size_t>(line, "frame index") != i)
        throw ParseError("gt records out of order");
      MotionFrame& g = d.gt.frames[i];
      for (int a = 0; a < 3; ++a)
        g.root_translation[a] = detail::read_value<double>(line, "translation");
      for (Rot6d& rot : g.pose)
        for (double& v : rot) v = detail::read_value<double>(line, "rot6d");
    }
  }
  return d;
}

} // namespace hmdtrack
