// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hmdtrack/random.hpp"

namespace hmdtrack {

// Dense row-major double matrix. Small helper for Jacobians and the
// orthogonal initializer; not a general linear-algebra layer.
class DMat {
public:
  DMat() = default;
  DMat(int rows, int cols)
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) {
    return a_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return a_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const std::vector<double>& data() const { return a_; }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

// Orthogonal matrix from the QR factorization of a seeded Gaussian draw,
// sign-corrected so diag(R) > 0 (makes the map Gaussian -> Q unique).
inline DMat random_orthogonal(int n, Rng& rng) {
  DMat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = rng.gaussian();

  DMat q(n, n);
  for (int i = 0; i < n; ++i) q(i, i) = 1.0;

  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) {
    double nrm = 0.0;
    for (int i = k; i < n; ++i) nrm += r(i, k) * r(i, k);
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    const double alpha = r(k, k) >= 0.0 ? -nrm : nrm;
    double vnorm2 = 0.0;
    for (int i = k; i < n; ++i) {
      v[i] = r(i, k);
      if (i == k) v[i] -= alpha;
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 < 1e-300) continue;
    const double scale = 2.0 / vnorm2;
    // R[k:, k:] -= scale * v (v^T R)
    for (int j = k; j < n; ++j) {
      double s = 0.0;
      for (int i = k; i < n; ++i) s += v[i] * r(i, j);
      s *= scale;
      for (int i = k; i < n; ++i) r(i, j) -= s * v[i];
    }
    // Q[:, k:] -= scale * (Q v) v^T
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = k; j < n; ++j) s += q(i, j) * v[j];
      s *= scale;
      for (int j = k; j < n; ++j) q(i, j) -= s * v[j];
    }
  }
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0)
      for (int i = 0; i < n; ++i) q(i, j) = -q(i, j);
  }
  return q;
}

} // namespace hmdtrack
