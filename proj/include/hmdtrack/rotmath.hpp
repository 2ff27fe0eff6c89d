// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/random.hpp"

namespace hmdtrack {

// Gram-Schmidt degeneracy threshold. Well below any meaningful sensor value.
inline constexpr double kDegenerateNorm = 1e-8;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

// 3x3 rotation matrix, row-major. Invariants (orthonormal columns,
// det = +1) are maintained by the constructors below, not enforced on
// every access; is_rotation() re-checks them explicitly.
struct Mat3 {
  double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  static Mat3 identity() { return Mat3{}; }

  static Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 r;
    for (int i = 0; i < 3; ++i) {
      r.m[i][0] = c0[i];
      r.m[i][1] = c1[i];
      r.m[i][2] = c2[i];
    }
    return r;
  }

  Vec3 column(int c) const { return {m[0][c], m[1][c], m[2][c]}; }
  Vec3 row(int r) const { return {m[r][0], m[r][1], m[r][2]}; }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }

  double trace() const { return m[0][0] + m[1][1] + m[2][2]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i][j] =
            m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
    return r;
  }

  Mat3 operator+(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
    return r;
  }

  Mat3 operator-(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] - o.m[i][j];
    return r;
  }

  Mat3 operator*(double s) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] * s;
    return r;
  }
};

inline double max_abs(const Mat3& a) {
  double r = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r = std::max(r, std::abs(a.m[i][j]));
  return r;
}

inline double determinant(const Mat3& a) {
  return a.m[0][0] * (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) -
         a.m[0][1] * (a.m[1][0] * a.m[2][2] - a.m[1][2] * a.m[2][0]) +
         a.m[0][2] * (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]);
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  const Mat3 gram = r.transposed() * r;
  Mat3 eye = Mat3::identity();
  if (max_abs(gram - eye) > tol) return false;
  return std::abs(determinant(r) - 1.0) <= tol;
}

// First two columns of a rotation matrix, column-major:
// v[0..2] = column 1, v[3..5] = column 2.
using Rot6d = std::array<double, 6>;

inline Rot6d rot6d_identity() { return {1, 0, 0, 0, 1, 0}; }

inline Rot6d matrix_to_rot6d(const Mat3& r) {
  return {r.m[0][0], r.m[1][0], r.m[2][0], r.m[0][1], r.m[1][1], r.m[2][1]};
}

// Gram-Schmidt decode of the 6D representation.
inline Mat3 rot6d_to_matrix(const Rot6d& v) {
  Vec3 u{v[0], v[1], v[2]};
  Vec3 w{v[3], v[4], v[5]};
  const double n1 = norm(u);
  if (n1 < kDegenerateNorm)
    throw DegenerateInput("rot6d first column norm below threshold");
  const Vec3 b1 = u / n1;
  Vec3 t2 = w - dot(b1, w) * b1;
  const double n2 = norm(t2);
  if (n2 < kDegenerateNorm)
    throw DegenerateInput("rot6d second column parallel to first");
  const Vec3 b2 = t2 / n2;
  const Vec3 b3 = cross(b1, b2);
  return Mat3::from_columns(b1, b2, b3);
}

// R_a^T * R_b.
inline Mat3 relative_rotation(const Mat3& r_a, const Mat3& r_b) {
  return r_a.transposed() * r_b;
}

// Geodesic distance between two rotations, in radians, in [0, pi].
inline double geodesic_angle(const Mat3& r_a, const Mat3& r_b) {
  const Mat3 rel = relative_rotation(r_a, r_b);
  double c = (rel.trace() - 1.0) * 0.5;
  c = std::min(1.0, std::max(-1.0, c));
  return std::acos(c);
}

// Rotation about a (not necessarily unit) axis by angle in radians.
inline Mat3 axis_angle_to_matrix(const Vec3& axis, double angle) {
  const double n = norm(axis);
  if (n < kDegenerateNorm)
    throw DegenerateInput("axis-angle axis norm below threshold");
  const Vec3 a = axis / n;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  Mat3 r;
  r.m[0][0] = c + a.x * a.x * t;
  r.m[0][1] = a.x * a.y * t - a.z * s;
  r.m[0][2] = a.x * a.z * t + a.y * s;
  r.m[1][0] = a.y * a.x * t + a.z * s;
  r.m[1][1] = c + a.y * a.y * t;
  r.m[1][2] = a.y * a.z * t - a.x * s;
  r.m[2][0] = a.z * a.x * t - a.y * s;
  r.m[2][1] = a.z * a.y * t + a.x * s;
  r.m[2][2] = c + a.z * a.z * t;
  return r;
}

// Axis * angle of a rotation (log map). Returns the zero vector at identity.
inline Vec3 rotation_log(const Mat3& r) {
  double c = (r.trace() - 1.0) * 0.5;
  c = std::min(1.0, std::max(-1.0, c));
  const double angle = std::acos(c);
  if (angle < 1e-12) return {0, 0, 0};
  Vec3 axis{r.m[2][1] - r.m[1][2], r.m[0][2] - r.m[2][0],
            r.m[1][0] - r.m[0][1]};
  const double s = norm(axis);
  if (s < 1e-12) {
    // Near pi: extract axis from the symmetric part.
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (r.m[i][i] > r.m[k][k]) k = i;
    Vec3 a{0, 0, 0};
    a[k] = std::sqrt(std::max(0.0, (r.m[k][k] + 1.0) * 0.5));
    for (int i = 0; i < 3; ++i)
      if (i != k) a[i] = r.m[k][i] / (2.0 * a[k]);
    return a / norm(a) * angle;
  }
  return axis / s * angle;
}

// Nearest rotation to a near-orthogonal matrix (Newton iteration for the
// polar factor). Used for averaging nearby orientations.
inline Mat3 project_to_rotation(const Mat3& a) {
  Mat3 x = a;
  for (int it = 0; it < 30; ++it) {
    const Mat3 xtx = x.transposed() * x;
    const Mat3 next = x * 1.5 - (x * xtx) * 0.5;
    if (max_abs(next - x) < 1e-15) {
      x = next;
      break;
    }
    x = next;
  }
  if (determinant(x) < 0.0)
    throw DegenerateInput("projection produced a reflection");
  return x;
}

namespace detail {
inline Mat3 quaternion_to_matrix(double w, double x, double y, double z) {
  Mat3 r;
  r.m[0][0] = 1 - 2 * (y * y + z * z);
  r.m[0][1] = 2 * (x * y - w * z);
  r.m[0][2] = 2 * (x * z + w * y);
  r.m[1][0] = 2 * (x * y + w * z);
  r.m[1][1] = 1 - 2 * (x * x + z * z);
  r.m[1][2] = 2 * (y * z - w * x);
  r.m[2][0] = 2 * (x * z - w * y);
  r.m[2][1] = 2 * (y * z + w * x);
  r.m[2][2] = 1 - 2 * (x * x + y * y);
  return r;
}
} // namespace detail

// Uniformly distributed random rotation (Shoemake's subgroup method).
inline Mat3 random_rotation(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double two_pi = 6.283185307179586476925286766559;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return detail::quaternion_to_matrix(a * std::sin(two_pi * u2),
                                      a * std::cos(two_pi * u2),
                                      b * std::sin(two_pi * u3),
                                      b * std::cos(two_pi * u3));
}

// Derivative of rot6d_to_matrix: d[b](r,c) = dR(r,c)/dv[b]. Used by the
// kinematic-chain Jacobians.
inline std::array<Mat3, 6> rot6d_to_matrix_jacobian(const Rot6d& v) {
  Vec3 u{v[0], v[1], v[2]};
  Vec3 w{v[3], v[4], v[5]};
  const double n1 = norm(u);
  if (n1 < kDegenerateNorm)
    throw DegenerateInput("rot6d jacobian at degenerate first column");
  const Vec3 b1 = u / n1;
  const Vec3 t2 = w - dot(b1, w) * b1;
  const double n2 = norm(t2);
  if (n2 < kDegenerateNorm)
    throw DegenerateInput("rot6d jacobian at degenerate second column");
  const Vec3 b2 = t2 / n2;

  // db1/du = (I - b1 b1^T)/n1
  Mat3 db1_du;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      db1_du.m[i][j] = ((i == j ? 1.0 : 0.0) - b1[i] * b1[j]) / n1;

  // dt2/du = -(b1 w^T + (b1.w) I) db1/du ; dt2/dw = I - b1 b1^T
  const double s = dot(b1, w);
  Mat3 dt2_db1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      dt2_db1.m[i][j] = -(b1[i] * w[j] + (i == j ? s : 0.0));
  const Mat3 dt2_du = dt2_db1 * db1_du;
  Mat3 dt2_dw;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      dt2_dw.m[i][j] = (i == j ? 1.0 : 0.0) - b1[i] * b1[j];

  // db2/dt2 = (I - b2 b2^T)/n2
  Mat3 db2_dt2;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      db2_dt2.m[i][j] = ((i == j ? 1.0 : 0.0) - b2[i] * b2[j]) / n2;
  const Mat3 db2_du = db2_dt2 * dt2_du;
  const Mat3 db2_dw = db2_dt2 * dt2_dw;

  auto skew = [](const Vec3& a) {
    Mat3 r;
    r.m[0][0] = 0;
    r.m[0][1] = -a.z;
    r.m[0][2] = a.y;
    r.m[1][0] = a.z;
    r.m[1][1] = 0;
    r.m[1][2] = -a.x;
    r.m[2][0] = -a.y;
    r.m[2][1] = a.x;
    r.m[2][2] = 0;
    return r;
  };
  // d(b1 x b2) = -[b2]x db1 + [b1]x db2
  const Mat3 neg_skew_b2 = skew(b2) * -1.0;
  const Mat3 skew_b1 = skew(b1);
  const Mat3 db3_du = neg_skew_b2 * db1_du + skew_b1 * db2_du;
  const Mat3 db3_dw = skew_b1 * db2_dw;

  std::array<Mat3, 6> out;
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < 3; ++i) {
      out[b].m[i][0] = db1_du.m[i][b];
      out[b].m[i][1] = db2_du.m[i][b];
      out[b].m[i][2] = db3_du.m[i][b];
      out[b + 3].m[i][0] = 0.0;
      out[b + 3].m[i][1] = db2_dw.m[i][b];
      out[b + 3].m[i][2] = db3_dw.m[i][b];
    }
  }
  return out;
}

} // namespace hmdtrack
