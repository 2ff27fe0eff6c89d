// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hmdtrack/rotmath.hpp"
#include "test_support.hpp"

using namespace hmdtrack;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("rot6d_to_matrix handles the identity and Gram-Schmidt cleanup") {
  const Mat3 eye = Mat3::identity();
  CHECK(testsup::mat_max_diff(rot6d_to_matrix({1, 0, 0, 0, 1, 0}), eye) == 0.0);
  // Scaling the first triple and adding a parallel component to the second
  // is removed by Gram-Schmidt.
  CHECK(testsup::mat_max_diff(rot6d_to_matrix({2, 0, 0, 3, 1, 0}), eye) <=
        1e-15);
}

TEST_CASE("rot6d_to_matrix rejects degenerate input") {
  CHECK_THROWS_AS(rot6d_to_matrix({0, 0, 0, 0, 1, 0}), DegenerateInput);
  CHECK_THROWS_AS(rot6d_to_matrix({1, 0, 0, 2, 0, 0}), DegenerateInput);
  CHECK_THROWS_AS(rot6d_to_matrix({1e-9, 0, 0, 0, 1, 0}), DegenerateInput);
}

TEST_CASE("matrix_to_rot6d reads off the first two columns") {
  const Rot6d id = matrix_to_rot6d(Mat3::identity());
  for (int i = 0; i < 6; ++i) CHECK(id[i] == rot6d_identity()[i]);

  const Mat3 rz = axis_angle_to_matrix({0, 0, 1}, kPi / 2.0);
  const Rot6d v = matrix_to_rot6d(rz);
  const Rot6d expected = {0, 1, 0, -1, 0, 0};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(v[i] - expected[i]) <= 1e-15);
}

TEST_CASE("matrix/6D roundtrip reproduces random rotations") {
  Rng rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    const Mat3 back = rot6d_to_matrix(matrix_to_rot6d(r));
    worst = std::max(worst, testsup::mat_max_diff(r, back));
    CHECK(is_rotation(back, 1e-9));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("rot6d_to_matrix is locally continuous") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    Rot6d v = testsup::random_rot6d(rng);
    Rot6d vp = v;
    for (int k = 0; k < 6; ++k) vp[k] += rng.uniform(-1.0, 1.0) * 4e-7;
    CHECK(testsup::mat_max_diff(rot6d_to_matrix(v), rot6d_to_matrix(vp)) <=
          1e-3);
  }
}

TEST_CASE("relative_rotation matches the explicit product") {
  Rng rng(13);
  const Mat3 r = random_rotation(rng);
  CHECK(testsup::mat_max_diff(relative_rotation(r, r), Mat3::identity()) <=
        1e-15);
  CHECK(testsup::mat_max_diff(relative_rotation(Mat3::identity(), r), r) ==
        0.0);

  for (int i = 0; i < 200; ++i) {
    const Mat3 a = random_rotation(rng);
    const Mat3 b = random_rotation(rng);
    const Mat3 rel = relative_rotation(a, b);
    // element-wise a^T b
    for (int r0 = 0; r0 < 3; ++r0)
      for (int c0 = 0; c0 < 3; ++c0) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a.m[k][r0] * b.m[k][c0];
        CHECK(std::abs(rel.m[r0][c0] - s) <= 1e-12);
      }
  }
}

TEST_CASE("geodesic_angle basics and quaternion oracle") {
  Rng rng(14);
  const Mat3 r = random_rotation(rng);
  CHECK(geodesic_angle(r, r) <= 1e-7);
  CHECK(std::abs(geodesic_angle(Mat3::identity(),
                                axis_angle_to_matrix({1, 0, 0}, kPi / 2)) -
                 kPi / 2) <= 1e-12);

  for (int i = 0; i < 300; ++i) {
    const Mat3 a = random_rotation(rng);
    const Mat3 b = random_rotation(rng);
    CHECK(std::abs(geodesic_angle(a, b) - testsup::quat_angle_between(a, b)) <=
          1e-9);
  }
}

TEST_CASE("geodesic_angle is symmetric and satisfies the triangle inequality") {
  Rng rng(15);
  for (int i = 0; i < 200; ++i) {
    const Mat3 a = random_rotation(rng);
    const Mat3 b = random_rotation(rng);
    const Mat3 c = random_rotation(rng);
    CHECK(std::abs(geodesic_angle(a, b) - geodesic_angle(b, a)) <= 1e-9);
    CHECK(geodesic_angle(a, c) <=
          geodesic_angle(a, b) + geodesic_angle(b, c) + 1e-9);
  }
}

TEST_CASE("rot6d jacobian matches central finite differences") {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    Rot6d v = testsup::random_rot6d(rng);
    // perturb away from the unit-norm manifold; the map must stay smooth
    for (double& u : v) u += rng.uniform(-0.2, 0.2);
    const auto jac = rot6d_to_matrix_jacobian(v);
    const double h = 1e-6;
    for (int b = 0; b < 6; ++b) {
      Rot6d lo = v, hi = v;
      lo[b] -= h;
      hi[b] += h;
      const Mat3 fd = (rot6d_to_matrix(hi) - rot6d_to_matrix(lo)) * (0.5 / h);
      CHECK(testsup::mat_max_diff(jac[b], fd) <= 1e-7);
    }
  }
}

TEST_CASE("rotation_log recovers axis*angle, including near pi") {
  Rng rng(18);
  for (int i = 0; i < 100; ++i) {
    Vec3 axis = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    axis = axis / norm(axis);
    const double angle = rng.uniform(0.01, kPi - 0.01);
    const Vec3 w = rotation_log(axis_angle_to_matrix(axis, angle));
    CHECK(std::abs(norm(w) - angle) <= 1e-9);
    CHECK(norm(w / norm(w) - axis) <= 1e-7);
  }
  // close to the pi branch
  const Vec3 axis{0.6, -0.64, 0.48};
  const Vec3 a = axis / norm(axis);
  for (double angle : {3.1415, kPi}) {
    const Vec3 w = rotation_log(axis_angle_to_matrix(a, angle));
    CHECK(std::abs(norm(w) - angle) <= 1e-3);
    const Vec3 dir = w / norm(w);
    CHECK(std::min(norm(dir - a), norm(dir + a)) <= 1e-3);
  }
  // identity maps to zero
  CHECK(norm(rotation_log(Mat3::identity())) == 0.0);
}

TEST_CASE("project_to_rotation recovers a rotation from a noisy average") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = random_rotation(rng);
    Mat3 noisy = r;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) noisy.m[a][b] += rng.uniform(-1e-3, 1e-3);
    const Mat3 proj = project_to_rotation(noisy);
    CHECK(is_rotation(proj, 1e-9));
    CHECK(geodesic_angle(proj, r) <= 5e-3);
  }
}
